#pragma once

#include <istream>
#include <string>
#include <vector>

namespace medsel::csv {

using Row = std::vector<std::string>;

/// Reads one RFC-4180 record (quoted fields may span lines). Returns false at EOF.
bool read_record(std::istream& in, Row& out);

/// Quotes a field only when it needs it.
std::string escape(const std::string& field);

std::string join(const Row& fields);

}  // namespace medsel::csv
