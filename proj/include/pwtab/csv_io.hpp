#pragma once

// Dataset CSV schema: header `x1,...,xd,y,a` (any column order), one subject
// per line, `a` in {0, 1}. Written with shortest round-trip decimals.

#include "pwtab/dataset.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace pwtab {

std::string format_double(double value);

void write_csv(const Dataset& data, std::ostream& out);
void write_csv(const Dataset& data, const std::filesystem::path& path);

// Throws ParseError naming the data row (1-based) and column on any defect.
Dataset read_csv(std::istream& in);
Dataset ingest_csv(const std::filesystem::path& path);

}  // namespace pwtab
