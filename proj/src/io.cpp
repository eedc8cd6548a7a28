#include <algorithm>
#include "io.hpp"

#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fslstm {

// Howard Hinnant's civil-day algorithms.
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                       static_cast<unsigned>(d) - 1u;
  const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
  return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) -
         719468;
}

void civil_from_days(std::int64_t z, int& year, int& month, int& day) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  month = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
  year = static_cast<int>(y + (month <= 2));
}

int day_of_week(std::int64_t timestamp) {
  std::int64_t days = timestamp / 86400;
  if (timestamp < 0 && timestamp % 86400 != 0) --days;
  // 1970-01-01 was a Thursday
  return static_cast<int>(((days % 7) + 7 + 3) % 7);
}

std::int64_t make_timestamp(int year, int month, int day, int hour, int minute,
                            int second) {
  return days_from_civil(year, month, day) * 86400 + hour * 3600 + minute * 60 + second;
}

std::string format_timestamp(std::int64_t ts) {
  std::int64_t days = ts / 86400;
  std::int64_t rem = ts % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  int y, m, d;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", y, m, d,
                static_cast<int>(rem / 3600), static_cast<int>((rem / 60) % 60),
                static_cast<int>(rem % 60));
  return buf;
}

std::int64_t parse_timestamp(const std::string& s) {
  int y, mo, d, h, mi, sec;
  char tz = 0;
  if (std::sscanf(s.c_str(), "%d-%d-%dT%d:%d:%d%c", &y, &mo, &d, &h, &mi, &sec, &tz) !=
          7 ||
      tz != 'Z') {
    throw std::invalid_argument("invalid ISO-8601 timestamp: '" + s + "'");
  }
  return make_timestamp(y, mo, d, h, mi, sec);
}

std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& context) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument(context + ": invalid number '" + s + "'");
  }
  return v;
}

std::int64_t parse_int(const std::string& s, const std::string& context) {
  std::int64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument(context + ": invalid integer '" + s + "'");
  }
  return v;
}

namespace {

std::string join_fields(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    line += fields[i];
  }
  return line;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << join_fields(header) << '\n';
  for (const auto& row : rows) out << join_fields(row) << '\n';
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::vector<std::vector<std::string>> read_csv(const std::string& path,
                                               const std::vector<std::string>& header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");

  std::vector<std::vector<std::string>> rows;
  std::string line;
  if (!std::getline(in, line)) return rows;  // empty file: empty dataset
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto got = split_fields(line);
  for (const auto& col : header) {
    if (std::find(got.begin(), got.end(), col) == got.end()) {
      throw std::runtime_error(path + ": missing column '" + col + "'");
    }
  }
  if (got != header) {
    throw std::runtime_error(path + ": unexpected column order or extra columns");
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      std::ostringstream os;
      os << path << ":" << line_no << ": expected " << header.size() << " fields, got "
         << fields.size();
      throw std::runtime_error(os.str());
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

namespace {

template <typename T>
void write_raw(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in, const char* what) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error(std::string("params blob: truncated ") + what);
  return v;
}

}  // namespace

void write_params_blob(const std::string& path, const ModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out.write("FSLP", 4);
  write_raw<std::uint32_t>(out, 1u);
  write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(params.tensors.size()));
  for (const auto& t : params.tensors) {
    write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) write_raw<std::uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(t.values.data()),
              static_cast<std::streamsize>(t.values.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

ModelParams read_params_blob(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "FSLP", 4) != 0)
    throw std::runtime_error(path + ": not a params blob");
  const auto version = read_raw<std::uint32_t>(in, "version");
  if (version != 1u) throw std::runtime_error(path + ": unsupported blob version");
  const auto count = read_raw<std::uint32_t>(in, "tensor count");
  ModelParams params;
  params.tensors.resize(count);
  for (auto& t : params.tensors) {
    const auto name_len = read_raw<std::uint32_t>(in, "name length");
    t.name.resize(name_len);
    in.read(t.name.data(), name_len);
    const auto ndims = read_raw<std::uint32_t>(in, "rank");
    t.shape.resize(ndims);
    std::size_t total = 1;
    for (auto& d : t.shape) {
      d = static_cast<std::size_t>(read_raw<std::uint64_t>(in, "dimension"));
      total *= d;
    }
    t.values.resize(total);
    in.read(reinterpret_cast<char*>(t.values.data()),
            static_cast<std::streamsize>(total * sizeof(double)));
    if (!in) throw std::runtime_error(path + ": truncated tensor '" + t.name + "'");
  }
  return params;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void append_line(const std::string& path, const std::string& line) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for appending");
  out << line << '\n';
  if (!out) throw std::runtime_error("append failed for '" + path + "'");
}

}  // namespace fslstm
