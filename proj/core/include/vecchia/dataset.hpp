#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "vecchia/error.hpp"
#include "vecchia/locations.hpp"

namespace vecchia {

/// Which CSV columns hold what. Empty `coordinates` means every column not
/// claimed as time, response or covariate.
struct ColumnSpec {
  std::vector<std::string> coordinates;
  std::optional<std::string> time;
  std::optional<std::string> response;
  std::vector<std::string> covariates;
  /// Coordinates are (longitude, latitude) in degrees; converted to unit
  /// 3-vectors.
  bool sphere_time = false;
  /// Drop malformed rows (and report them) instead of failing.
  bool skip_bad = false;
};

struct Dataset {
  std::vector<std::string> coordinate_names;
  Locations locs;
  std::vector<double> y;     ///< empty when no response column
  Eigen::MatrixXd covariates;  ///< n x p, p = 0 when none
  std::vector<std::size_t> rejected_lines;  ///< 1-based line numbers

  std::size_t size() const { return locs.size(); }
};

class ParseError : public InvalidArgument {
 public:
  ParseError(std::string source, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Reads a comma-separated file with a header row. Rows keep file order.
Dataset ingest_csv(const std::filesystem::path& path, const ColumnSpec& spec);
Dataset parse_csv(std::istream& in, const ColumnSpec& spec, std::string_view source = "<input>");

}  // namespace vecchia
