#include "rmood/model_io.hpp"

#include <set>
#include <string>

#include "rmood/error.hpp"
#include "rmood/fileio.hpp"

namespace rmood {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, std::initializer_list<std::string_view> allowed,
                         std::string_view where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) {
      throw ConfigError("unknown key '" + key + "' in " + std::string(where));
    }
  }
}

}  // namespace

json detector_config_to_json(const DetectorConfig& config) {
  json forest = {{"n_trees", config.forest.n_trees},
                 {"subsample", config.forest.subsample},
                 {"max_depth", config.forest.max_depth ? json(*config.forest.max_depth)
                                                       : json(nullptr)},
                 {"seed", config.forest.seed}};
  return {{"window", config.window},
          {"s", config.kernel.scale},
          {"sigma", config.kernel.sigma},
          {"variant", std::string(to_string(config.variant))},
          {"forest", std::move(forest)}};
}

DetectorConfig detector_config_from_json(const json& j, const DetectorConfig& defaults) {
  DetectorConfig config = defaults;
  try {
    reject_unknown_keys(j, {"window", "s", "sigma", "variant", "forest"}, "detector config");
    if (j.contains("window")) config.window = j.at("window").get<std::size_t>();
    if (j.contains("s")) config.kernel.scale = j.at("s").get<double>();
    if (j.contains("sigma") && !j.at("sigma").is_null()) {
      config.kernel.sigma = j.at("sigma").get<double>();
    }
    if (j.contains("variant")) config.variant = parse_variant(j.at("variant").get<std::string>());
    if (j.contains("forest")) {
      const auto& f = j.at("forest");
      reject_unknown_keys(f, {"n_trees", "subsample", "max_depth", "seed"}, "forest config");
      if (f.contains("n_trees")) config.forest.n_trees = f.at("n_trees").get<std::size_t>();
      if (f.contains("subsample")) config.forest.subsample = f.at("subsample").get<std::size_t>();
      if (f.contains("max_depth")) {
        config.forest.max_depth =
            f.at("max_depth").is_null()
                ? std::nullopt
                : std::optional<std::size_t>(f.at("max_depth").get<std::size_t>());
      }
      if (f.contains("seed")) config.forest.seed = f.at("seed").get<std::uint64_t>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid detector config: ") + e.what());
  }
  config.validate();
  return config;
}

json forest_to_json(const IsolationForest& forest) {
  json trees = json::array();
  for (const auto& tree : forest.trees) {
    std::vector<std::int32_t> feature, left, right;
    std::vector<double> split;
    std::vector<std::uint64_t> size;
    for (const auto& node : tree.nodes) {
      feature.push_back(node.feature);
      split.push_back(node.split);
      left.push_back(node.left);
      right.push_back(node.right);
      size.push_back(node.size);
    }
    trees.push_back({{"feature", feature},
                     {"split", split},
                     {"left", left},
                     {"right", right},
                     {"size", size}});
  }
  return {{"psi", forest.psi},
          {"dim", forest.dim},
          {"max_depth", forest.max_depth},
          {"trees", std::move(trees)}};
}

IsolationForest forest_from_json(const json& j) {
  IsolationForest forest;
  forest.psi = j.at("psi").get<std::size_t>();
  forest.dim = j.at("dim").get<std::size_t>();
  forest.max_depth = j.at("max_depth").get<std::size_t>();
  if (forest.psi < 2 || forest.dim == 0) throw LoadError("invalid forest header");
  for (const auto& t : j.at("trees")) {
    const auto feature = t.at("feature").get<std::vector<std::int32_t>>();
    const auto split = t.at("split").get<std::vector<double>>();
    const auto left = t.at("left").get<std::vector<std::int32_t>>();
    const auto right = t.at("right").get<std::vector<std::int32_t>>();
    const auto size = t.at("size").get<std::vector<std::uint64_t>>();
    const std::size_t n = feature.size();
    if (n == 0 || split.size() != n || left.size() != n || right.size() != n ||
        size.size() != n) {
      throw LoadError("tree node arrays are empty or of unequal length");
    }
    IsolationTree tree;
    tree.nodes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto& node = tree.nodes[i];
      node = TreeNode{feature[i], split[i], left[i], right[i], size[i]};
      if (node.is_leaf()) {
        if (node.left != -1 || node.right != -1) throw LoadError("leaf with children");
        continue;
      }
      // Pre-order storage: children always follow their parent.
      const auto idx = static_cast<std::int64_t>(i);
      if (static_cast<std::size_t>(node.feature) >= forest.dim || node.left <= idx ||
          node.right <= idx || static_cast<std::size_t>(node.left) >= n ||
          static_cast<std::size_t>(node.right) >= n) {
        throw LoadError("tree node " + std::to_string(i) + " has invalid links");
      }
    }
    forest.trees.push_back(std::move(tree));
  }
  if (forest.trees.empty()) throw LoadError("forest has no trees");
  return forest;
}

std::string save_model(const DetectorModel& model) {
  json forests = json::array();
  for (const auto& f : model.forests) forests.push_back(forest_to_json(f));
  json doc = {{"version", kModelFormatVersion},
              {"config", detector_config_to_json(model.config)},
              {"n_dims", model.n_dims()},
              {"forests", std::move(forests)}};
  if (model.cusum) {
    doc["cusum"] = {{"target", model.cusum->target},
                    {"slack", model.cusum->slack},
                    {"threshold", model.cusum->threshold}};
  }
  return doc.dump() + "\n";
}

DetectorModel load_model(std::string_view bytes) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw LoadError(std::string("model payload is not valid JSON: ") + e.what());
  }
  try {
    if (!doc.is_object() || !doc.contains("version")) {
      throw LoadError("model payload lacks a version tag");
    }
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw VersionError("model format version " + std::to_string(version) +
                         " is not supported (expected " +
                         std::to_string(kModelFormatVersion) + ")");
    }
    DetectorModel model;
    model.config = detector_config_from_json(doc.at("config"));
    const auto n_dims = doc.at("n_dims").get<std::size_t>();
    for (const auto& f : doc.at("forests")) {
      auto forest = forest_from_json(f);
      forest.config = model.config.forest;
      if (forest.dim != feature_dim(model.config.variant)) {
        throw LoadError("forest dimensionality does not match the feature variant");
      }
      model.forests.push_back(std::move(forest));
    }
    if (model.forests.size() != n_dims || n_dims == 0) {
      throw LoadError("model declares " + std::to_string(n_dims) + " dimensions but holds " +
                      std::to_string(model.forests.size()) + " forests");
    }
    if (doc.contains("cusum")) {
      const auto& c = doc.at("cusum");
      model.cusum = CusumParams{c.at("target").get<double>(), c.at("slack").get<double>(),
                                c.at("threshold").get<double>()};
      model.cusum->validate();
    }
    return model;
  } catch (const json::exception& e) {
    throw LoadError(std::string("malformed model payload: ") + e.what());
  } catch (const ConfigError& e) {
    throw LoadError(std::string("invalid model config: ") + e.what());
  }
}

void save_model_file(const std::filesystem::path& path, const DetectorModel& model) {
  write_file_atomic(path, save_model(model));
}

DetectorModel load_model_file(const std::filesystem::path& path) {
  return load_model(read_file(path));
}

}  // namespace rmood
