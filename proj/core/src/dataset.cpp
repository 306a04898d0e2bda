#include "vecchia/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

namespace vecchia {

ParseError::ParseError(std::string source, std::size_t line, const std::string& what)
    : InvalidArgument(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<double> parse_number(std::string_view field) {
  if (field.empty()) return std::nullopt;
  if (field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace

Dataset parse_csv(std::istream& in, const ColumnSpec& spec, std::string_view source_view) {
  const std::string source(source_view);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    for (auto name : split(line)) header.emplace_back(name);
    break;
  }
  if (header.empty()) throw ParseError(source, line_no, "missing header row");
  const std::size_t header_line = line_no;

  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError(source, header_line, "no column named '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  std::vector<std::size_t> claimed;
  std::optional<std::size_t> time_col;
  std::optional<std::size_t> response_col;
  if (spec.time) claimed.push_back(*(time_col = column(*spec.time)));
  if (spec.response) claimed.push_back(*(response_col = column(*spec.response)));
  std::vector<std::size_t> covariate_cols;
  for (const auto& name : spec.covariates) claimed.push_back(covariate_cols.emplace_back(column(name)));

  Dataset data;
  std::vector<std::size_t> coord_cols;
  if (spec.coordinates.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (std::find(claimed.begin(), claimed.end(), c) == claimed.end()) coord_cols.push_back(c);
    }
  } else {
    for (const auto& name : spec.coordinates) coord_cols.push_back(column(name));
  }
  if (coord_cols.empty()) throw ParseError(source, header_line, "no coordinate columns");
  if (coord_cols.size() > 4) throw ParseError(source, header_line, "at most four coordinate columns are supported");
  if (spec.sphere_time && coord_cols.size() != 2) {
    throw ParseError(source, header_line, "sphere-time input needs exactly two coordinate columns (lon, lat)");
  }
  for (std::size_t c : coord_cols) data.coordinate_names.push_back(header[c]);

  const std::size_t d = coord_cols.size();
  std::vector<double> coords;
  std::vector<double> times;
  std::vector<double> covariates;
  std::vector<double> row_coords(d);
  std::vector<double> row_cov(covariate_cols.size());
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    std::string problem;
    if (fields.size() != header.size()) {
      problem = "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size());
    }
    auto read = [&](std::size_t c) {
      if (!problem.empty()) return 0.0;
      const auto v = parse_number(fields[c]);
      if (!v) {
        problem = "column '" + header[c] + "': '" + std::string(fields[c]) + "' is not a finite number";
        return 0.0;
      }
      return *v;
    };
    for (std::size_t k = 0; k < d; ++k) row_coords[k] = read(coord_cols[k]);
    const double t = time_col ? read(*time_col) : 0.0;
    const double yv = response_col ? read(*response_col) : 0.0;
    for (std::size_t k = 0; k < covariate_cols.size(); ++k) row_cov[k] = read(covariate_cols[k]);
    if (!problem.empty()) {
      if (!spec.skip_bad) throw ParseError(source, line_no, problem);
      data.rejected_lines.push_back(line_no);
      continue;
    }
    coords.insert(coords.end(), row_coords.begin(), row_coords.end());
    if (time_col) times.push_back(t);
    if (response_col) data.y.push_back(yv);
    covariates.insert(covariates.end(), row_cov.begin(), row_cov.end());
  }

  const std::size_t n = coords.size() / d;
  if (spec.sphere_time) {
    std::vector<double> lon(n);
    std::vector<double> lat(n);
    for (std::size_t i = 0; i < n; ++i) {
      lon[i] = coords[2 * i];
      lat[i] = coords[2 * i + 1];
    }
    data.locs = Locations::from_sphere_time(lon, lat, times);
  } else {
    data.locs = Locations(d, std::move(coords), std::move(times));
  }
  const auto p = static_cast<Eigen::Index>(covariate_cols.size());
  data.covariates.resize(static_cast<Eigen::Index>(n), p);
  for (std::size_t i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < p; ++k) {
      data.covariates(static_cast<Eigen::Index>(i), k) = covariates[i * static_cast<std::size_t>(p) + static_cast<std::size_t>(k)];
    }
  }
  return data;
}

Dataset ingest_csv(const std::filesystem::path& path, const ColumnSpec& spec) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return parse_csv(in, spec, path.string());
}

}  // namespace vecchia
