#include "timecf/run_config.hpp"

#include <fstream>
#include <set>

namespace timecf {

void RunConfig::reseed(std::uint64_t s) {
  seed = s;
  cnn.seed = s;
  rst.seed = s;
  gan.seed = s;
  explain.sample_seed = s;
  iforest.seed = s;
}

void RunConfig::validate() const {
  const bool ucr = data.ucr_train.has_value();
  if (ucr == data.synthetic.has_value()) throw UsageError("config must name exactly one data source (ucr_train or synthetic)");
  if (data.ucr_test && !ucr) throw UsageError("ucr_test given without ucr_train");
  if (!(data.test_fraction > 0.0 && data.test_fraction < 1.0)) throw UsageError("test_fraction must lie in (0,1)");
  if (data.synthetic) data.synthetic->validate();
  cnn.validate();
  gan.validate();
  if (explain.m == 0) throw UsageError("explain.m must be positive");
  if (!(explain.eps >= 0.0)) throw UsageError("explain.eps must be non-negative");
  if (threads == 0) throw UsageError("threads must be positive");
  if (classifiers.empty() || methods.empty()) throw UsageError("benchmark needs at least one classifier and method");
  for (const auto& name : classifiers)
    if (name != "1nn" && name != "cnn" && name != "constant") throw UsageError("unknown classifier '" + name + "'");
  if (classifier != "1nn" && classifier != "cnn" && classifier != "constant")
    throw UsageError("unknown classifier '" + classifier + "'");
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

template <typename T>
T read(const Json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config." + key + ": " + e.what());
  }
}

}  // namespace

RunConfig run_config_from_json(const Json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  static const std::set<std::string> known{"seed",   "data",    "classifier", "method",    "benchmark",
                                           "cnn",    "shapelets", "gan",      "explain",   "iforest",
                                           "cache_gans", "threads", "instance", "out",     "shapelets_file",
                                           "gan_dir"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw UsageError("config: unknown key '" + k + "'");

  RunConfig c;
  if (j.contains("seed")) c.reseed(read<std::uint64_t>(j, "seed"));
  if (j.contains("data")) {
    const Json& d = j.at("data");
    if (!d.is_object()) throw UsageError("config.data must be an object");
    for (const auto& [k, v] : d.items())
      if (k != "name" && k != "ucr_train" && k != "ucr_test" && k != "synthetic" && k != "test_fraction")
        throw UsageError("config.data: unknown key '" + k + "'");
    if (d.contains("name")) c.data.name = read<std::string>(d, "name");
    if (d.contains("ucr_train")) c.data.ucr_train = resolve(base_dir, read<std::string>(d, "ucr_train"));
    if (d.contains("ucr_test")) c.data.ucr_test = resolve(base_dir, read<std::string>(d, "ucr_test"));
    if (d.contains("test_fraction")) c.data.test_fraction = read<double>(d, "test_fraction");
    if (d.contains("synthetic")) {
      SyntheticSpec spec;
      from_json(d.at("synthetic"), spec);
      c.data.synthetic = spec;
    }
    if (c.data.ucr_train && !d.contains("name")) c.data.name = c.data.ucr_train->stem().string();
  }
  if (j.contains("classifier")) c.classifier = read<std::string>(j, "classifier");
  if (j.contains("method")) c.method = parse_method(read<std::string>(j, "method"));
  if (j.contains("benchmark")) {
    const Json& b = j.at("benchmark");
    for (const auto& [k, v] : b.items())
      if (k != "classifiers" && k != "methods") throw UsageError("config.benchmark: unknown key '" + k + "'");
    if (b.contains("classifiers")) c.classifiers = read<std::vector<std::string>>(b, "classifiers");
    if (b.contains("methods")) {
      c.methods.clear();
      for (const auto& m : read<std::vector<std::string>>(b, "methods")) c.methods.push_back(parse_method(m));
    }
  }
  if (j.contains("cnn")) from_json(j.at("cnn"), c.cnn);
  if (j.contains("shapelets")) from_json(j.at("shapelets"), c.rst);
  if (j.contains("gan")) from_json(j.at("gan"), c.gan);
  if (j.contains("explain")) from_json(j.at("explain"), c.explain);
  if (j.contains("iforest")) from_json(j.at("iforest"), c.iforest);
  if (j.contains("cache_gans")) c.cache_gans = read<bool>(j, "cache_gans");
  if (j.contains("threads")) c.threads = read<std::size_t>(j, "threads");
  if (j.contains("instance")) c.instance = read<std::size_t>(j, "instance");
  if (j.contains("out")) c.out = resolve(base_dir, read<std::string>(j, "out"));
  if (j.contains("shapelets_file")) c.shapelets_file = resolve(base_dir, read<std::string>(j, "shapelets_file"));
  if (j.contains("gan_dir")) c.gan_dir = resolve(base_dir, read<std::string>(j, "gan_dir"));
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("config " + path.string() + ": " + e.what(), 0);
  }
  return run_config_from_json(j, path.parent_path());
}

Json to_json(const RunConfig& c) {
  Json data{{"name", c.data.name}, {"test_fraction", c.data.test_fraction}};
  if (c.data.ucr_train) data["ucr_train"] = c.data.ucr_train->string();
  if (c.data.ucr_test) data["ucr_test"] = c.data.ucr_test->string();
  if (c.data.synthetic) data["synthetic"] = to_json(*c.data.synthetic);
  Json methods = Json::array();
  for (auto m : c.methods) methods.push_back(to_string(m));
  Json j{{"seed", c.seed},
         {"data", data},
         {"classifier", c.classifier},
         {"method", to_string(c.method)},
         {"benchmark", Json{{"classifiers", c.classifiers}, {"methods", methods}}},
         {"cnn", to_json(c.cnn)},
         {"shapelets", to_json(c.rst)},
         {"gan", to_json(c.gan)},
         {"explain", to_json(c.explain)},
         {"iforest", to_json(c.iforest)},
         {"cache_gans", c.cache_gans},
         {"instance", c.instance}};
  if (c.shapelets_file) j["shapelets_file"] = c.shapelets_file->string();
  if (c.gan_dir) j["gan_dir"] = c.gan_dir->string();
  return j;
}

std::pair<Dataset, Dataset> load_data(const RunConfig& c, LabelCodec* codec) {
  if (c.data.synthetic) return stratified_split(make_synthetic_bump(*c.data.synthetic), c.data.test_fraction, c.seed);
  if (!c.data.ucr_train) throw UsageError("config names no data source");
  LabelCodec local;
  LabelCodec* lc = codec ? codec : &local;
  Dataset train = parse_ucr_file(*c.data.ucr_train, lc);
  if (c.data.ucr_test) return {std::move(train), parse_ucr_file(*c.data.ucr_test, lc)};
  return stratified_split(train, c.data.test_fraction, c.seed);
}

BenchmarkConfig benchmark_config(const RunConfig& c) {
  BenchmarkConfig b;
  b.dataset = c.data.name;
  b.classifiers = c.classifiers;
  b.methods = c.methods;
  b.rst = c.rst;
  b.gan = c.gan;
  b.cnn = c.cnn;
  b.explain = c.explain;
  b.iforest = c.iforest;
  b.cache_gans = c.cache_gans;
  b.threads = c.threads;
  return b;
}

}  // namespace timecf
