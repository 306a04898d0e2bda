#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "vecchia/vecchia.hpp"

namespace vecchia::cli {

using json = nlohmann::json;

struct GlobalOptions {
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out_dir = ".";
};

struct InputOptions {
  std::string data;  ///< CSV path
  std::string grid;  ///< e.g. "30x30"
  std::string response;
  std::vector<std::string> coords;
  std::string time;
  std::vector<std::string> covariates;
  bool skip_bad = false;
  bool sphere_time = false;
};

struct ModelOptions {
  std::string family = "matern";
  double variance = 1.0;
  double range = 0.1;
  double range_time = 1.0;
  double smoothness = 0.5;
  double nugget = 0.0;
  double mean = 0.0;
  double jitter = 0.0;
  /// Parameters given explicitly on the command line or in a config file.
  std::vector<Parameter> given;

  CovarianceModel build() const;
};

struct StructureFlags {
  std::string order = "ammd";
  std::size_t m = 30;
  std::string group = "on";
  std::string distance = "spatial";

  OrderingScheme scheme() const;
  bool grouped() const { return group == "on"; }
  NeighborDistance metric() const { return distance == "spacetime" ? NeighborDistance::spacetime : NeighborDistance::spatial; }
};

/// Everything a subcommand needs besides its own flags.
struct Context {
  std::string command;
  GlobalOptions global;
  std::string config_text;  ///< resolved configuration, one key=value per line
  std::string output;       ///< explicit artifact path ("-" for stdout)
  std::ostream* out = nullptr;
};

/// Dataset from --data, or a regular grid from --grid. With
/// `need_response` and a grid, responses are simulated from `model`.
Dataset load_input(const InputOptions& input, bool need_response, const CovarianceModel& model,
                   const GlobalOptions& global);
Locations parse_grid(const std::string& spec);

/// Destination for the main artifact of a command: the explicit --output
/// path, or <out-dir>/<command>.<extension>.
class Artifact {
 public:
  Artifact(const Context& ctx, const std::string& extension);
  std::ostream& stream() { return *stream_; }
  const std::filesystem::path& path() const { return path_; }
  bool to_stdout() const { return path_.empty(); }
  /// Writes the reproducibility stamp next to the artifact.
  void finish(const Context& ctx, const json& summary);

 private:
  std::filesystem::path path_;
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
};

std::string join(const std::vector<int>& values, char sep);
void write_coordinate_header(std::ostream& os, const Dataset& data);
void write_coordinates(std::ostream& os, const Dataset& data, std::size_t i);
json model_json(const CovarianceModel& model);
std::string hash_hex(std::uint64_t hash);

int cmd_order(const Context& ctx, const InputOptions& input, const StructureFlags& flags);
int cmd_neighbors(const Context& ctx, const InputOptions& input, const StructureFlags& flags, bool nn_check);
int cmd_group(const Context& ctx, const InputOptions& input, const StructureFlags& flags, bool stats);
int cmd_loglik(const Context& ctx, const InputOptions& input, const ModelOptions& model, const StructureFlags& flags,
               bool exact);

struct FitFlags {
  std::vector<std::size_t> schedule{10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  std::vector<std::string> free;
  double convergence = 0.02;
  double tolerance = 1e-6;
  int max_evaluations = 2000;
  bool fixed_mean = false;
};
int cmd_fit(const Context& ctx, const InputOptions& input, const ModelOptions& model, const StructureFlags& flags,
            const FitFlags& fit_flags);

struct PredictFlags {
  std::string locations;  ///< CSV of prediction coordinates
  std::string grid;
  std::optional<std::size_t> m_prediction;
  std::string prediction_order = "random";
  std::size_t ensemble = 0;
  bool draws = false;
};
int cmd_predict(const Context& ctx, const InputOptions& input, const ModelOptions& model, const StructureFlags& flags,
                const PredictFlags& predict);
int cmd_sim(const Context& ctx, const InputOptions& input, const ModelOptions& model, const StructureFlags& flags,
            std::size_t members);

struct BenchmarkFlags {
  std::vector<std::string> orders{"coord", "middle", "random", "mmd", "ammd"};
  std::vector<std::size_t> neighbors{10, 30};
  std::string grouping = "both";
  std::vector<std::string> releff;
};
int cmd_benchmark(const Context& ctx, const InputOptions& input, const ModelOptions& model,
                  const BenchmarkFlags& bench);

int cmd_timing(const Context& ctx, const InputOptions& input, const ModelOptions& model, const StructureFlags& flags,
               int repeat);

}  // namespace vecchia::cli
