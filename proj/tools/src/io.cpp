#include <algorithm>
#include <charconv>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "common.hpp"
#include "vecchia_cli/cli.hpp"

namespace vecchia::cli {

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string hash_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

CovarianceModel ModelOptions::build() const {
  const auto fam = parse_family(family);
  if (!fam) throw InvalidArgument("unknown kernel family '" + family + "'");
  CovarianceModel model;
  model.family = *fam;
  model.variance = variance;
  model.range = range;
  model.range_time = range_time;
  model.smoothness = smoothness;
  model.nugget = nugget;
  model.mean = mean;
  model.jitter = jitter;
  model.validate();
  return model;
}

OrderingScheme StructureFlags::scheme() const {
  const auto s = parse_ordering(order);
  if (!s) throw InvalidArgument("unknown ordering '" + order + "'");
  return *s;
}

Locations parse_grid(const std::string& spec) {
  std::vector<std::size_t> sides;
  std::size_t start = 0;
  while (start <= spec.size()) {
    const std::size_t x = std::min(spec.find('x', start), spec.size());
    std::size_t side = 0;
    const auto [ptr, ec] = std::from_chars(spec.data() + start, spec.data() + x, side);
    if (ec != std::errc() || ptr != spec.data() + x || side == 0) {
      throw InvalidArgument("grid must look like 30x30 (got '" + spec + "')");
    }
    sides.push_back(side);
    start = x + 1;
  }
  if (sides.size() > 4) throw InvalidArgument("grids have at most four axes");
  return Locations::regular_grid(sides);
}

Dataset load_input(const InputOptions& input, bool need_response, const CovarianceModel& model,
                   const GlobalOptions& global) {
  if (input.data.empty() == input.grid.empty()) throw InvalidArgument("give exactly one of --data and --grid");
  if (!input.data.empty()) {
    ColumnSpec spec;
    spec.coordinates = input.coords;
    if (!input.time.empty()) spec.time = input.time;
    if (!input.response.empty()) spec.response = input.response;
    spec.covariates = input.covariates;
    spec.sphere_time = input.sphere_time;
    spec.skip_bad = input.skip_bad;
    Dataset data = ingest_csv(input.data, spec);
    if (!data.rejected_lines.empty()) {
      std::ostringstream msg;
      msg << "skipped " << data.rejected_lines.size() << " malformed row(s) of " << input.data << " (line";
      for (std::size_t k = 0; k < std::min<std::size_t>(data.rejected_lines.size(), 10); ++k) {
        msg << ' ' << data.rejected_lines[k];
      }
      msg << (data.rejected_lines.size() > 10 ? " ...)" : ")");
      warn(msg.str());
    }
    if (data.size() == 0) throw InvalidArgument(input.data + " holds no usable rows");
    if (need_response && data.y.empty()) throw InvalidArgument("this command needs --response");
    return data;
  }

  Dataset data;
  data.locs = parse_grid(input.grid);
  for (std::size_t a = 0; a < data.locs.dim(); ++a) data.coordinate_names.push_back("x" + std::to_string(a + 1));
  if (need_response) {
    if (model.family != KernelFamily::matern_isotropic) throw InvalidArgument("synthetic grids carry no time axis");
    // One Vecchia draw with 30 neighbours under maximin ordering.
    const std::size_t m = std::min<std::size_t>(30, data.size() - 1);
    const VecchiaStructure structure(data.locs, order_ammd(data.locs), StructureOptions{m, true,
                                     NeighborDistance::spatial, global.threads});
    const SparseInverseCholesky gamma = structure.build(model, data.locs, global.threads);
    Philox rng(global.seed, streams::synthetic_data);
    Eigen::VectorXd z(static_cast<Eigen::Index>(data.size()));
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
    const Eigen::VectorXd draw = gamma.solve(z);
    data.y = structure.permutation().unapply(std::span<const double>(draw.data(), data.size()));
    for (double& v : data.y) v += model.mean;
  }
  return data;
}

Artifact::Artifact(const Context& ctx, const std::string& extension) {
  if (ctx.output == "-") {
    stream_ = ctx.out;
    return;
  }
  path_ = ctx.output.empty() ? std::filesystem::path(ctx.global.out_dir) / (ctx.command + "." + extension)
                             : std::filesystem::path(ctx.output);
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  file_ = std::make_unique<std::ofstream>(path_);
  if (!*file_) throw InvalidArgument("cannot write " + path_.string());
  file_->precision(17);
  stream_ = file_.get();
}

void Artifact::finish(const Context& ctx, const json& summary) {
  std::filesystem::path stamp_path;
  if (to_stdout()) {
    stamp_path = std::filesystem::path(ctx.global.out_dir) / (ctx.command + ".stamp.json");
    std::filesystem::create_directories(ctx.global.out_dir);
  } else {
    file_->close();
    if (!*file_) throw InvalidArgument("failed writing " + path_.string());
    stamp_path = path_;
    stamp_path += ".stamp.json";
  }
  json stamp;
  stamp["command"] = ctx.command;
  stamp["version"] = version();
  stamp["seed"] = ctx.global.seed;
  stamp["config_hash"] = hash_hex(fnv1a(ctx.config_text));
  stamp["config"] = ctx.config_text;
  stamp["artifact"] = to_stdout() ? "-" : path_.string();
  stamp["summary"] = summary;
  std::ofstream os(stamp_path);
  if (!os) throw InvalidArgument("cannot write " + stamp_path.string());
  os << stamp.dump(2) << '\n';

  json line = summary;
  line["command"] = ctx.command;
  line["artifact"] = stamp["artifact"];
  line["stamp"] = stamp_path.string();
  *ctx.out << line.dump() << '\n';
}

std::string join(const std::vector<int>& values, char sep) {
  std::string s;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k > 0) s += sep;
    s += std::to_string(values[k]);
  }
  return s;
}

void write_coordinate_header(std::ostream& os, const Dataset& data) {
  for (const auto& name : data.coordinate_names) os << name << ',';
  if (data.locs.has_time()) os << "time,";
}

void write_coordinates(std::ostream& os, const Dataset& data, std::size_t i) {
  for (std::size_t a = 0; a < data.locs.dim(); ++a) os << data.locs.coord(i, a) << ',';
  if (data.locs.has_time()) os << data.locs.time(i) << ',';
}

json model_json(const CovarianceModel& model) {
  json j;
  j["family"] = std::string(to_string(model.family));
  for (Parameter p : model.parameters()) j[std::string(to_string(p))] = model.get(p);
  j["mean"] = model.mean;
  return j;
}

}  // namespace vecchia::cli
