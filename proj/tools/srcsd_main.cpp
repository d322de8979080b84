#include <CLI11.hpp>
#include <json.hpp>

#include <complex>
#include <fstream>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "srcsd/analysis.hpp"
#include "srcsd/config.hpp"

using namespace srcsd;
using nlohmann::json;

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;  // key=value
    std::string format = "text";         // text | json
    std::string outdir;
};

std::string output_path(const CommonOpts& c, const std::string& name,
                        const std::string& explicit_path) {
    if (!explicit_path.empty()) return explicit_path;
    std::filesystem::path dir = c.outdir.empty() ? "." : c.outdir;
    return (dir / name).string();
}

ConverterParams load_params(const CommonOpts& c) {
    std::map<std::string, double> keys;
    if (!c.config_path.empty()) {
        keys = read_key_values(c.config_path);
    }
    for (const auto& kv : c.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("--set expects key=value, got: " + kv);
        }
        keys[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    }
    return params_from_keys(keys).params;
}

void emit_record(const std::vector<std::pair<std::string, double>>& fields,
                 const std::string& format) {
    if (format == "json") {
        json j;
        for (const auto& [k, v] : fields) j[k] = v;
        std::cout << j.dump(2) << "\n";
    } else {
        for (const auto& [k, v] : fields) {
            std::cout << k << " = " << format_number(v) << "\n";
        }
    }
}

json failure_entry(const std::string& where, const std::exception& e) {
    return json{{"where", where}, {"error", e.what()}};
}

std::vector<double> parse_list(const std::string& csv) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        auto next = csv.find(',', pos);
        if (next == std::string::npos) next = csv.size();
        out.push_back(std::stod(csv.substr(pos, next - pos)));
        pos = next + 1;
    }
    return out;
}

Method parse_method(const std::string& name) {
    if (name == "model") return Method::model;
    if (name == "sim") return Method::sim;
    if (name == "linearized") return Method::linearized;
    throw std::invalid_argument("unknown method: " + name);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"series resonant converter sampled-data analysis"};
    app.require_subcommand(1);
    app.fallthrough();

    CommonOpts common;
    if (const char* env = std::getenv("SRCSD_OUTDIR")) common.outdir = env;
    app.add_option("--config", common.config_path, "parameter file (key = value or JSON)");
    app.add_option("--set", common.overrides,
                   "override a config key, e.g. --set Vin=700 (repeatable)");
    app.add_option("--format", common.format, "record output format: text or json")
        ->check(CLI::IsMember({"text", "json"}));
    app.add_option("--outdir", common.outdir,
                   "default directory for output files (env SRCSD_OUTDIR)");

    auto* cmd_derive = app.add_subcommand("derive", "print derived tank quantities");

    auto* cmd_ss = app.add_subcommand("steady-state", "solve the cyclic steady state");
    int waveform_points = 0;
    std::string waveform_out;
    cmd_ss->add_option("--waveform-points", waveform_points,
                       "also sample one period of waveforms at M points");
    cmd_ss->add_option("--waveform-out", waveform_out, "waveform CSV path");

    auto* cmd_bode = app.add_subcommand("bode", "model gain over a frequency grid");
    double fmin = 100.0, fmax = 10e3;
    int points = 200;
    std::string bode_out;
    cmd_bode->add_option("--fmin", fmin, "lowest ripple frequency, Hz");
    cmd_bode->add_option("--fmax", fmax, "highest ripple frequency, Hz");
    cmd_bode->add_option("--points", points, "number of log-spaced points");
    cmd_bode->add_option("--out", bode_out, "output CSV path");

    auto* cmd_res = app.add_subcommand("resonance", "audiosusceptibility resonance");
    bool compare_sim = false;
    cmd_res->add_flag("--compare-sim", compare_sim, "also locate the simulated peak");

    auto* cmd_sim = app.add_subcommand("sim", "switched simulation with input ripple");
    double fin = 1e3, amplitude = -1.0;
    int settle = -1, measure = -1;
    std::string trace_out;
    cmd_sim->add_option("--fin", fin, "ripple frequency, Hz")->required();
    cmd_sim->add_option("--amplitude", amplitude, "ripple amplitude, V (default 0.1% Vin)");
    cmd_sim->add_option("--settle", settle, "settle periods (default: auto)");
    cmd_sim->add_option("--measure", measure, "measure periods (default: auto)");
    cmd_sim->add_option("--trace", trace_out, "write the full trace CSV here");

    auto* cmd_sweep = app.add_subcommand("sweep", "gain curves over an (F, Qe) grid");
    std::string grid_file, sweep_out, sweep_method = "model";
    cmd_sweep->add_option("--grid-file", grid_file, "grid description file")->required();
    cmd_sweep->add_option("--method", sweep_method, "model, sim or linearized");
    cmd_sweep->add_option("--out", sweep_out, "output CSV path");

    auto* cmd_region = app.add_subcommand("region", "unity-gain design region boundary");
    std::string qe_grid_csv = "0.5,1,2,3,5,10", f_bounds = "1.01:2.0";
    std::string region_method = "linearized", region_out;
    cmd_region->add_option("--qe-grid", qe_grid_csv, "comma-separated Qe values");
    cmd_region->add_option("--f-bounds", f_bounds, "F search bounds, lo:hi");
    cmd_region->add_option("--method", region_method, "linearized or sim");
    cmd_region->add_option("--out", region_out, "output CSV path");

    CLI11_PARSE(app, argc, argv);

    json failures = json::array();

    try {
        if (cmd_derive->parsed()) {
            const ConverterParams p = load_params(common);
            const DerivedParams d = derive_params(p);
            emit_record({{"Lr", p.Lr},
                         {"Cr", p.Cr},
                         {"Co", p.Co},
                         {"Ro", p.Ro},
                         {"N", p.N},
                         {"Vin", p.Vin},
                         {"fs", p.fs},
                         {"omega_r", d.omega_r},
                         {"fr", d.fr()},
                         {"Zc", d.Zc},
                         {"Ts", d.Ts},
                         {"F", d.F},
                         {"Rac", d.Rac},
                         {"Qe", d.Qe}},
                        common.format);
        } else if (cmd_ss->parsed()) {
            const ConverterParams p = load_params(common);
            const OperatingPoint op = solve_cyclic_steady_state(p);
            emit_record({{"iL", op.state.iL},
                         {"vc", op.state.vc},
                         {"vo", op.state.vo},
                         {"T1", op.times.T1},
                         {"T3", op.times.T3},
                         {"Ts", op.times.Ts},
                         {"residual_norm", op.residual_norm},
                         {"dc_gain", op.dc_gain},
                         {"iterations", static_cast<double>(op.iterations)}},
                        common.format);
            if (waveform_points > 0) {
                CsvTable t;
                t.header = {"t", "iL", "vc", "vo"};
                for (const WaveformSample& s :
                     sample_period_waveform(p, op, waveform_points)) {
                    t.rows.push_back({s.t, s.iL, s.vc, s.vo});
                }
                const std::string path = output_path(common, "waveform.csv", waveform_out);
                write_file(path, to_csv(t));
                std::cerr << "wrote " << path << "\n";
            }
        } else if (cmd_bode->parsed()) {
            const ConverterParams p = load_params(common);
            const OperatingPoint op = solve_cyclic_steady_state(p);
            const RationalTF tf = as_transfer_function(p, op);
            std::string csv = "f_in_hz,gain_db,normalized_gain,phase_deg,method\n";
            for (int i = 0; i < points; ++i) {
                const double f =
                    fmin * std::pow(fmax / fmin,
                                    points == 1 ? 0.0 : static_cast<double>(i) / (points - 1));
                const GainPoint g = evaluate_gain(tf, f, op.dc_gain);
                csv += format_number(f) + "," + format_number(g.ripple_gain_db) + "," +
                       format_number(g.normalized_gain) + "," +
                       format_number(g.phase_deg) + ",model\n";
            }
            const std::string path = output_path(common, "bode.csv", bode_out);
            write_file(path, csv);
            std::cerr << "wrote " << path << "\n";
        } else if (cmd_res->parsed()) {
            const ConverterParams p = load_params(common);
            const OperatingPoint op = solve_cyclic_steady_state(p);
            const ResonanceInfo info = as_resonance_frequency(p, op);
            std::vector<std::pair<std::string, double>> fields = {
                {"f_hz", info.f_hz},
                {"omega_rad_s", info.omega_rad},
                {"f_pole_hz", info.f_pole_hz}};
            if (compare_sim) {
                const auto [f_lo, f_hi] = ripple_band(p);
                try {
                    const SimPeak peak = find_resonance_sim(p, f_lo, f_hi, -1.0, op.state);
                    fields.emplace_back("f_sim_hz", peak.f_peak);
                    fields.emplace_back("sim_gain_db", peak.ripple_gain_db);
                    fields.emplace_back("error_pct",
                                        (peak.f_peak - info.f_hz) / peak.f_peak * 100.0);
                } catch (const NoResonanceError& e) {
                    failures.push_back(failure_entry("resonance --compare-sim", e));
                }
            }
            emit_record(fields, common.format);
        } else if (cmd_sim->parsed()) {
            const ConverterParams p = load_params(common);
            const OperatingPoint op = solve_cyclic_steady_state(p);
            const MeasurePlan plan =
                plan_measurement(p, fin, 8, measure > 0 ? measure : 1000, settle);
            RippleSpec ripple;
            ripple.f_in = plan.f_used;
            ripple.amplitude = amplitude < 0.0 ? 1e-3 * p.Vin : amplitude;
            const SimTrace trace =
                simulate(p, ripple, plan.settle_periods, plan.measure_periods, op.state);
            const RippleGain gain = measure_ripple_gain(trace, plan.f_used);
            emit_record({{"f_in", plan.f_used},
                         {"amplitude", ripple.amplitude},
                         {"settle_periods", static_cast<double>(plan.settle_periods)},
                         {"measure_periods", static_cast<double>(plan.measure_periods)},
                         {"ripple_gain_db", gain.ripple_gain_db},
                         {"normalized_gain", gain.normalized_gain},
                         {"dc_gain", gain.dc_gain}},
                        common.format);
            if (trace.amplitude_warning) {
                std::cerr << "warning: ripple amplitude exceeds 5% of Vin;"
                          << " small-signal assumption is doubtful\n";
            }
            if (!trace_out.empty()) {
                CsvTable t;
                t.header = {"k", "t", "vin", "iL", "vc", "vo", "T1", "T3"};
                for (std::size_t k = 0; k < trace.vin.size(); ++k) {
                    t.rows.push_back({static_cast<double>(k), k * trace.Ts, trace.vin[k],
                                      trace.iL[k], trace.vc[k], trace.vo[k], trace.T1[k],
                                      trace.T3[k]});
                }
                write_file(trace_out, to_csv(t));
                std::cerr << "wrote " << trace_out << "\n";
            }
        } else if (cmd_sweep->parsed()) {
            // grid file lines: F = 1.01, 1.05 / Qe = 0.5, 2 / fin_min, fin_max, fin_points
            std::ifstream in(grid_file);
            if (!in) throw std::runtime_error("cannot open grid file: " + grid_file);
            SweepGrid grid;
            double fin_min = 100.0, fin_max = 10e3;
            int fin_points = 40;
            std::string line;
            while (std::getline(in, line)) {
                const auto hash = line.find('#');
                if (hash != std::string::npos) line = line.substr(0, hash);
                const auto eq = line.find('=');
                if (eq == std::string::npos) continue;
                auto trimmed = [](std::string s) {
                    const auto b = s.find_first_not_of(" \t\r");
                    const auto e = s.find_last_not_of(" \t\r");
                    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
                };
                const std::string key = trimmed(line.substr(0, eq));
                const std::vector<double> vals = parse_list(trimmed(line.substr(eq + 1)));
                if (key == "F") {
                    grid.F = vals;
                } else if (key == "Qe") {
                    grid.Qe = vals;
                } else if (key == "fin_min") {
                    fin_min = vals.at(0);
                } else if (key == "fin_max") {
                    fin_max = vals.at(0);
                } else if (key == "fin_points") {
                    fin_points = static_cast<int>(vals.at(0));
                } else {
                    throw std::invalid_argument("unknown grid key: " + key);
                }
            }
            for (int i = 0; i < fin_points; ++i) {
                grid.f_in.push_back(fin_min *
                                    std::pow(fin_max / fin_min,
                                             fin_points == 1
                                                 ? 0.0
                                                 : static_cast<double>(i) / (fin_points - 1)));
            }
            const Method method = parse_method(sweep_method);
            const std::vector<FrequencyResponse> responses = frequency_sweep(grid, method);
            std::string csv = "F,Qe,f_in,gain_db,normalized_gain,method\n";
            for (const FrequencyResponse& r : responses) {
                if (!r.solved) {
                    failures.push_back(json{{"where", "sweep"},
                                            {"F", r.F},
                                            {"Qe", r.Qe},
                                            {"error", r.error}});
                    continue;
                }
                for (const FrequencyResponsePoint& pt : r.points) {
                    csv += format_number(r.F) + "," + format_number(r.Qe) + "," +
                           format_number(pt.f_in) + "," + format_number(pt.gain_db) + "," +
                           format_number(pt.normalized_gain) + "," +
                           method_name(r.method) + "\n";
                }
            }
            const std::string path = output_path(common, "sweep.csv", sweep_out);
            write_file(path, csv);
            std::cerr << "wrote " << path << "\n";
        } else if (cmd_region->parsed()) {
            const auto colon = f_bounds.find(':');
            if (colon == std::string::npos) {
                throw std::invalid_argument("--f-bounds expects lo:hi");
            }
            const double F_lo = std::stod(f_bounds.substr(0, colon));
            const double F_hi = std::stod(f_bounds.substr(colon + 1));
            const std::vector<double> qe_grid = parse_list(qe_grid_csv);
            const Method method = parse_method(region_method);
            const RegionCurve curve =
                design_region_boundary(qe_grid, F_lo, F_hi, method, BaseDesign{});
            std::string csv = "Qe,F_boundary,method\n";
            for (std::size_t i = 0; i < curve.Qe.size(); ++i) {
                csv += format_number(curve.Qe[i]) + "," +
                       format_number(curve.F_boundary[i]) + "," +
                       method_name(curve.method) + "\n";
            }
            const std::string path = output_path(common, "region.csv", region_out);
            write_file(path, csv);
            std::cerr << "wrote " << path << "\n";
        }
    } catch (const std::exception& e) {
        failures.push_back(failure_entry(app.get_subcommands().front()->get_name(), e));
    }

    if (!failures.empty()) {
        std::cout << json{{"failures", failures}}.dump(2) << "\n";
        return 1;
    }
    return 0;
}
