#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "flowspec/outlier.hpp"
#include "flowspec/scans.hpp"

namespace flowspec {

using Json = nlohmann::ordered_json;

// 17 significant digits: parsing the string recovers the exact double.
std::string format_double(double x);

// Comma-separated table, header first. Rows must match the header arity.
void write_table(const std::string& path,
                 const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows);

// Pretty-printed JSON document; key order is insertion order.
void write_summary(const std::string& path, const Json& doc);

const char* regime_name(Regime r);
const char* status_name(CellStatus s);
const char* side_name(OutlierSide s);

std::string version_string();

}  // namespace flowspec
