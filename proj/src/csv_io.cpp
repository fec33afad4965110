#include "pwtab/csv_io.hpp"

#include "pwtab/errors.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>
#include <vector>

namespace pwtab {

std::string format_double(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

void write_csv(const Dataset& data, std::ostream& out) {
  const Eigen::Index d = data.x.cols();
  for (Eigen::Index j = 0; j < d; ++j) out << 'x' << (j + 1) << ',';
  out << "y,a\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (Eigen::Index j = 0; j < d; ++j) out << format_double(data.x(r, j)) << ',';
    out << format_double(data.y(r)) << ',' << static_cast<int>(data.a[i]) << '\n';
  }
}

void write_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_csv(data, out);
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  for (auto& f : fields) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
  }
  return fields;
}

double parse_number(std::string_view field, std::size_t row, const std::string& column) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  if (!field.empty() && *begin == '+') ++begin;
  const auto result = std::from_chars(begin, end, value);
  if (field.empty() || result.ec != std::errc() || result.ptr != end || !std::isfinite(value)) {
    throw ParseError("row " + std::to_string(row) + ", column '" + column + "': '" + std::string(field) +
                         "' is not a finite number",
                     row, column);
  }
  return value;
}

}  // namespace

Dataset read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError("empty input: missing header", 0, "");
  }
  const std::vector<std::string_view> header = split_fields(line);
  std::vector<std::string> names(header.begin(), header.end());

  int y_col = -1;
  int a_col = -1;
  std::vector<int> x_cols;
  for (std::size_t j = 0; j < names.size(); ++j) {
    const std::string& name = names[j];
    if (name == "y") {
      y_col = static_cast<int>(j);
    } else if (name == "a") {
      a_col = static_cast<int>(j);
    } else if (name.size() > 1 && name[0] == 'x') {
      std::size_t index = 0;
      const auto res = std::from_chars(name.data() + 1, name.data() + name.size(), index);
      if (res.ec != std::errc() || res.ptr != name.data() + name.size() || index == 0) {
        throw ParseError("header: unrecognized column '" + name + "'", 0, name);
      }
      if (x_cols.size() < index) x_cols.resize(index, -1);
      if (x_cols[index - 1] >= 0) throw ParseError("header: duplicate column '" + name + "'", 0, name);
      x_cols[index - 1] = static_cast<int>(j);
    } else {
      throw ParseError("header: unrecognized column '" + name + "'", 0, name);
    }
  }
  if (y_col < 0) throw ParseError("header: missing column 'y'", 0, "y");
  if (a_col < 0) throw ParseError("header: missing column 'a'", 0, "a");
  for (std::size_t j = 0; j < x_cols.size(); ++j) {
    if (x_cols[j] < 0) {
      throw ParseError("header: missing column 'x" + std::to_string(j + 1) + "'", 0, "x" + std::to_string(j + 1));
    }
  }

  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<std::uint8_t> as;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    const std::vector<std::string_view> fields = split_fields(line);
    if (fields.size() != names.size()) {
      throw ParseError("row " + std::to_string(row) + ": expected " + std::to_string(names.size()) +
                           " fields, found " + std::to_string(fields.size()),
                       row, "");
    }
    for (std::size_t j = 0; j < x_cols.size(); ++j) {
      xs.push_back(parse_number(fields[static_cast<std::size_t>(x_cols[j])], row, names[static_cast<std::size_t>(x_cols[j])]));
    }
    ys.push_back(parse_number(fields[static_cast<std::size_t>(y_col)], row, "y"));
    const double a = parse_number(fields[static_cast<std::size_t>(a_col)], row, "a");
    if (a != 0.0 && a != 1.0) {
      throw ParseError("row " + std::to_string(row) + ", column 'a': treatment must be 0 or 1, found '" +
                           std::string(fields[static_cast<std::size_t>(a_col)]) + "'",
                       row, "a");
    }
    as.push_back(static_cast<std::uint8_t>(a));
  }

  Dataset data;
  const auto n = static_cast<Eigen::Index>(ys.size());
  const auto d = static_cast<Eigen::Index>(x_cols.size());
  data.x.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) data.x(i, j) = xs[static_cast<std::size_t>(i * d + j)];
  }
  data.y = Eigen::Map<const Eigen::VectorXd>(ys.data(), n);
  data.a = std::move(as);
  return data;
}

Dataset ingest_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_csv(in);
}

}  // namespace pwtab
