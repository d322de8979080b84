#include "srcsd/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace srcsd {

namespace {

const std::vector<std::string> kPhysicalKeys = {"Lr", "Cr", "Co", "Ro", "N", "Vin", "fs"};
const std::vector<std::string> kRatioKeys = {"F", "Qe", "fr", "N", "Ro", "Vin"};
constexpr double kDefaultCo = 100e-9;

std::string join(const std::vector<std::string>& keys) {
    std::string out;
    for (const auto& k : keys) {
        if (!out.empty()) out += ", ";
        out += k;
    }
    return out;
}

double take(const std::map<std::string, double>& keys, const std::string& name) {
    const auto it = keys.find(name);
    if (it == keys.end()) {
        throw std::invalid_argument("missing required key: " + name);
    }
    return it->second;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

std::map<std::string, double> read_key_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();

    std::map<std::string, double> keys;
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        const nlohmann::json j = nlohmann::json::parse(text);
        for (const auto& [key, value] : j.items()) {
            keys[key] = value.get<double>();
        }
        return keys;
    }

    std::istringstream lines(text);
    std::string line;
    int lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        " is not of the form key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            std::size_t used = 0;
            const double v = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
            keys[key] = v;
        } catch (const std::exception&) {
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": cannot parse value for key '" + key + "'");
        }
    }
    return keys;
}

LoadedConfig params_from_keys(const std::map<std::string, double>& keys) {
    if (keys.empty()) {
        throw std::invalid_argument(
            "empty config: provide either {" + join(kPhysicalKeys) + "} or {" +
            join(kRatioKeys) + "}");
    }
    const bool physical = keys.count("Lr") > 0;

    // Keys that identify one form unambiguously (the rest are shared).
    static const std::vector<std::string> kPhysicalOnly = {"Lr", "Cr", "fs"};
    static const std::vector<std::string> kRatioOnly = {"F", "Qe", "fr"};
    std::vector<std::string> allowed = physical ? kPhysicalKeys : kRatioKeys;
    if (!physical) allowed.push_back("Co");  // optional in the ratio form
    for (const auto& [key, value] : keys) {
        (void)value;
        if (std::find(allowed.begin(), allowed.end(), key) != allowed.end()) continue;
        const auto& other = physical ? kRatioOnly : kPhysicalOnly;
        if (std::find(other.begin(), other.end(), key) != other.end()) {
            throw std::invalid_argument(
                "config mixes both parameter forms (offending key: " + key + ")");
        }
        throw std::invalid_argument("unknown config key: " + key);
    }

    LoadedConfig out;
    if (physical) {
        out.form = ParamForm::physical;
        out.params = ConverterParams{take(keys, "Lr"), take(keys, "Cr"),
                                     take(keys, "Co"), take(keys, "Ro"),
                                     take(keys, "N"),  take(keys, "Vin"),
                                     take(keys, "fs")};
        validate(out.params);
    } else {
        out.form = ParamForm::ratio;
        const double Co = keys.count("Co") ? keys.at("Co") : kDefaultCo;
        out.params = params_from_ratios(take(keys, "F"), take(keys, "Qe"),
                                        take(keys, "fr"), take(keys, "N"),
                                        take(keys, "Ro"), take(keys, "Vin"), Co);
    }
    return out;
}

LoadedConfig load_params_file(const std::string& path) {
    return params_from_keys(read_key_values(path));
}

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return std::string(buf);
}

std::string to_csv(const CsvTable& table) {
    std::string out;
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (i) out += ',';
        out += table.header[i];
    }
    out += '\n';
    for (const auto& row : table.rows) {
        if (row.size() != table.header.size()) {
            throw std::invalid_argument("csv row width does not match header");
        }
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_number(row[i]);
        }
        out += '\n';
    }
    return out;
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << contents;
    if (!out) throw std::runtime_error("write failed: " + path);
}

nlohmann::json params_to_json(const ConverterParams& p) {
    return nlohmann::json{{"Lr", p.Lr}, {"Cr", p.Cr}, {"Co", p.Co}, {"Ro", p.Ro},
                          {"N", p.N},   {"Vin", p.Vin}, {"fs", p.fs}};
}

ConverterParams params_from_json(const nlohmann::json& j) {
    ConverterParams p{j.at("Lr").get<double>(), j.at("Cr").get<double>(),
                      j.at("Co").get<double>(), j.at("Ro").get<double>(),
                      j.at("N").get<double>(),  j.at("Vin").get<double>(),
                      j.at("fs").get<double>()};
    validate(p);
    return p;
}

}  // namespace srcsd
