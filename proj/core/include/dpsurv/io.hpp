#pragma once

#include <istream>
#include <map>
#include <string>

#include "dpsurv/types.hpp"

namespace dpsurv::io {

// Dataset CSV layout: header `time,event,w,area,z1..zJ` with `area`, `x_true`
// optional and any number of z columns (including none). Column order is
// free; unknown columns raise parse_error.
SurvivalDataset read_dataset_csv(const std::string& path);
SurvivalDataset parse_dataset_csv(std::istream& in);

// Writes the same layout. Doubles are emitted with shortest round-trip
// precision, so write -> read reproduces the dataset bit-exactly.
void write_dataset_csv(const SurvivalDataset& data, const std::string& path);
std::string dataset_to_csv(const SurvivalDataset& data);

// JSON record array with the same keys as the CSV columns; z covariates are
// given either as "z": [..] per record or as "z1", "z2", ... scalars.
SurvivalDataset read_dataset_json(const std::string& path);
SurvivalDataset parse_dataset_json(const std::string& text);

// Flat key=value config files; '#' starts a comment, blank lines ignored.
std::map<std::string, std::string> read_key_values(const std::string& path);
std::map<std::string, std::string> parse_key_values(std::istream& in);

// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace dpsurv::io
