#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "srcsd/params.hpp"

namespace srcsd {

enum class ParamForm { physical, ratio };

struct LoadedConfig {
    ConverterParams params;
    ParamForm form;
};

/// Ordered key/value pairs read from a config file. Text files hold
/// `key = value` lines (# comments); .json files hold one flat object.
std::map<std::string, double> read_key_values(const std::string& path);

/// Build parameters from config keys. Presence of `Lr` selects the physical
/// form {Lr, Cr, Co, Ro, N, Vin, fs}; otherwise the ratio form
/// {F, Qe, fr, N, Ro, Vin} applies, with Co optional (default 100 nF).
/// Unknown keys and mixed forms are rejected by name.
LoadedConfig params_from_keys(const std::map<std::string, double>& keys);

LoadedConfig load_params_file(const std::string& path);

/// Deterministic formatting used for every emitted number ("%.12g").
std::string format_number(double v);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

/// Byte-stable CSV rendering of a numeric table.
std::string to_csv(const CsvTable& table);

void write_file(const std::string& path, const std::string& contents);

nlohmann::json params_to_json(const ConverterParams& p);
ConverterParams params_from_json(const nlohmann::json& j);

}  // namespace srcsd
