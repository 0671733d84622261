#include "flowspec/io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace flowspec {

namespace {

bool needs_quoting(const std::string& s) {
  return s.find_first_of(",\"\n\r") != std::string::npos;
}

std::string csv_field(const std::string& s) {
  if (!needs_quoting(s)) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_table(const std::string& path,
                 const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  if (header.empty()) throw std::invalid_argument("table header is empty");
  for (const auto& row : rows)
    if (row.size() != header.size())
      throw std::invalid_argument("table row arity does not match header");

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << csv_field(header[i]);
  }
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << csv_field(row[i]);
    }
    out << '\n';
  }
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path);
}

void write_summary(const std::string& path, const Json& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << doc.dump(2) << '\n';
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path);
}

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::weak: return "weak";
    case Regime::persistent: return "persistent";
    case Regime::transient: return "transient";
  }
  return "unknown";
}

const char* status_name(CellStatus s) {
  switch (s) {
    case CellStatus::ok: return "ok";
    case CellStatus::infinite: return "infinite";
    case CellStatus::failed: return "failed";
  }
  return "unknown";
}

const char* side_name(OutlierSide s) {
  return s == OutlierSide::upper ? "upper" : "lower";
}

std::string version_string() {
#ifdef FLOWSPEC_VERSION
  return FLOWSPEC_VERSION;
#else
  return "0.0.0";
#endif
}

}  // namespace flowspec
