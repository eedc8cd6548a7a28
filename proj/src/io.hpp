#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "model.hpp"

namespace fslstm {

// --- civil time (UTC only) ---

std::int64_t days_from_civil(int year, int month, int day);
void civil_from_days(std::int64_t days, int& year, int& month, int& day);

// 0 = Monday .. 6 = Sunday
int day_of_week(std::int64_t timestamp);

std::int64_t make_timestamp(int year, int month, int day, int hour = 0, int minute = 0,
                            int second = 0);

// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_timestamp(std::int64_t ts);
std::int64_t parse_timestamp(const std::string& s);

// --- numbers ---

// shortest round-trip representation
std::string format_double(double v);
double parse_double(const std::string& s, const std::string& context);
std::int64_t parse_int(const std::string& s, const std::string& context);

// --- delimiter-separated text ---

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// Validates the header (naming any missing column) and reports malformed rows
// with their line number. An empty file yields an empty row set.
std::vector<std::vector<std::string>> read_csv(const std::string& path,
                                               const std::vector<std::string>& header);

// --- model parameter blobs ---

// Binary: magic "FSLP", version, tensor count, then per tensor name, shape and
// little-endian 64-bit floats in manifest order.
void write_params_blob(const std::string& path, const ModelParams& params);
ModelParams read_params_blob(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);
void append_line(const std::string& path, const std::string& line);

}  // namespace fslstm
