#include "timecf/json_io.hpp"

#include <charconv>
#include <set>

namespace timecf {

namespace {

Json interval_json(const Interval& iv) { return Json{{"start", iv.start}, {"length", iv.length}}; }

template <typename T>
Json opt_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

// Reads known keys into existing defaults and rejects anything else.
class Fields {
 public:
  Fields(const Json& j, std::string ctx) : j_(j), ctx_(std::move(ctx)) {
    if (!j_.is_object()) throw UsageError(ctx_ + ": expected a JSON object");
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    known_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(ctx_ + "." + key + ": " + e.what());
    }
  }

  void get(const std::string& key, Interval& out) {
    known_.insert(key);
    if (!j_.contains(key)) return;
    Fields f(j_.at(key), ctx_ + "." + key);
    f.get("start", out.start);
    f.get("length", out.length);
    f.finish();
  }

  void get(const std::string& key, std::optional<double>& out) {
    known_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return;
    double v = 0.0;
    get(key, v);
    out = v;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!known_.count(k)) throw UsageError(ctx_ + ": unknown key '" + k + "'");
  }

 private:
  const Json& j_;
  std::string ctx_;
  std::set<std::string> known_;
};

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

Json to_json(const ShapeletCandidate& s) {
  return Json{{"source_index", s.source_index}, {"class_label", s.class_label.value}, {"start", s.interval.start},
              {"length", s.interval.length},    {"quality", s.quality},              {"threshold", s.split_threshold},
              {"values", s.values}};
}

Json to_json(const std::vector<ShapeletCandidate>& shapelets) {
  Json arr = Json::array();
  for (const auto& s : shapelets) arr.push_back(to_json(s));
  return arr;
}

std::vector<ShapeletCandidate> shapelets_from_json(const Json& j) {
  const Json& arr = j.is_object() && j.contains("shapelets") ? j.at("shapelets") : j;
  if (!arr.is_array()) throw ParseError("shapelet file must hold a JSON array or an object with a shapelets array", 0);
  std::vector<ShapeletCandidate> out;
  for (const auto& e : arr) {
    try {
      ShapeletCandidate s;
      s.source_index = e.at("source_index").get<std::size_t>();
      s.class_label = ClassLabel{e.at("class_label").get<int>()};
      s.interval = {e.at("start").get<std::size_t>(), e.at("length").get<std::size_t>()};
      s.quality = e.at("quality").get<double>();
      s.split_threshold = e.at("threshold").get<double>();
      s.values = e.at("values").get<std::vector<double>>();
      if (s.values.size() != s.interval.length) throw ParseError("shapelet values do not match its length", 0);
      out.push_back(std::move(s));
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(std::string("malformed shapelet entry: ") + ex.what(), 0);
    }
  }
  return out;
}

Json to_json(const CounterfactualResult& r) {
  return Json{{"method", to_string(r.method)},
              {"original_id", r.original_id},
              {"original_label", r.original_label.value},
              {"predicted_label", r.predicted_label.value},
              {"interval", interval_json(r.interval)},
              {"shapelet_ref", opt_json(r.shapelet_ref)},
              {"fake_index", opt_json(r.fake_index)},
              {"neighbor_index", opt_json(r.neighbor_index)},
              {"hamming", r.hamming},
              {"l1", r.l1},
              {"counterfactual", r.counterfactual.vec()}};
}

Json to_json(const ExplanationReport& r, bool include_timing) {
  Json results = Json::array();
  for (const auto& c : r.results) results.push_back(to_json(c));
  Json outcomes = Json::array();
  for (const auto& o : r.outcomes)
    outcomes.push_back(Json{{"shapelet_index", o.shapelet_index}, {"used", o.used}, {"attempts", o.attempts}, {"flips", o.flips}});
  Json j{{"original_id", r.original_id},
         {"original_label", r.original_label.value},
         {"method", to_string(r.method)},
         {"explained", r.explained()},
         {"original", r.original.vec()},
         {"fakes", r.fakes},
         {"recommended", r.recommended ? to_json(*r.recommended) : Json(nullptr)},
         {"n_results", r.results.size()},
         {"results", results},
         {"candidate_outcomes", outcomes}};
  if (include_timing)
    j["runtime"] = Json{{"gan_seconds", r.runtime.gan_seconds},
                        {"sample_seconds", r.runtime.sample_seconds},
                        {"search_seconds", r.runtime.search_seconds}};
  return j;
}

Json to_json(const MetricsReport& r, bool include_timing) {
  Json cells = Json::array();
  for (const auto& c : r.cells) {
    Json recs = Json::array();
    for (const auto& rec : c.records) {
      Json e{{"test_index", rec.test_index},
             {"id", rec.id},
             {"true_label", rec.true_label.value},
             {"explained_label", rec.explained_label.value},
             {"candidates", rec.candidates},
             {"explained", rec.recommended.has_value()}};
      if (rec.recommended) {
        e["interval"] = interval_json(rec.recommended->interval);
        e["hamming"] = rec.recommended->hamming;
        e["l1"] = rec.recommended->l1;
        e["sparsity"] = *rec.sparsity;
        e["outlier_score"] = *rec.outlier_score;
      }
      recs.push_back(std::move(e));
    }
    Json cj{{"dataset", c.dataset},
            {"classifier", c.classifier},
            {"method", c.method},
            {"classifier_accuracy", c.classifier_accuracy},
            {"instances", c.instances},
            {"explained", c.explained},
            {"sensibility", c.sensibility},
            {"closeness", opt_json(c.closeness)},
            {"closeness_per_step", opt_json(c.closeness_per_step)},
            {"sparsity", opt_json(c.sparsity)},
            {"plausibility", opt_json(c.plausibility)},
            {"results_total", c.results_total},
            {"results_flipped", c.results_flipped},
            {"results_local", c.results_local},
            {"error", opt_json(c.error)},
            {"records", recs}};
    if (include_timing) cj["seconds"] = c.seconds;
    cells.push_back(std::move(cj));
  }
  Json j{{"shapelets", r.shapelets},
         {"plausibility_threshold", r.plausibility_threshold},
         {"test_outlier_rate", r.test_outlier_rate},
         {"cells", cells}};
  if (include_timing)
    j["runtime"] = Json{{"shapelet_seconds", r.shapelet_seconds}, {"gan_seconds", r.gan_seconds}, {"total_seconds", r.total_seconds}};
  return j;
}

Json to_json(const SyntheticSpec& s) {
  return Json{{"n_per_class", s.n_per_class}, {"length", s.length},           {"bump_interval", interval_json(s.bump_interval)},
              {"bump_height", s.bump_height}, {"noise_sigma", s.noise_sigma}, {"seed", s.seed}};
}

Json to_json(const RstConfig& c) {
  return Json{{"lengths", c.lengths},
              {"max_candidates", c.max_candidates},
              {"n_keep", c.n_keep},
              {"time_budget", opt_json(c.time_budget)},
              {"seed", c.seed},
              {"overlap_threshold", c.overlap_threshold},
              {"z_normalize", c.z_normalize},
              {"balance_classes", c.balance_classes}};
}

Json to_json(const TimeGanConfig& c) {
  return Json{{"hidden_dim", c.hidden_dim},   {"num_layers", c.num_layers},
              {"z_dim", c.z_dim},             {"iters_embed", c.iters_embed},
              {"iters_supervised", c.iters_supervised}, {"iters_joint", c.iters_joint},
              {"batch_size", c.batch_size},   {"lr", c.lr},
              {"seed", c.seed},               {"lambda_sup", c.lambda_sup},
              {"lambda_moment", c.lambda_moment}, {"gamma", c.gamma},
              {"d_threshold", c.d_threshold}};
}

Json to_json(const CnnConfig& c) {
  return Json{{"filters", c.filters}, {"kernel", c.kernel}, {"epochs", c.epochs},
              {"batch_size", c.batch_size}, {"lr", c.lr}, {"seed", c.seed}};
}

Json to_json(const ExplainConfig& c) { return Json{{"m", c.m}, {"eps", c.eps}, {"sample_seed", c.sample_seed}}; }

Json to_json(const IForestConfig& c) {
  return Json{{"n_trees", c.n_trees}, {"subsample", c.subsample}, {"seed", c.seed}};
}

Json to_json(const TrainingLog& log) {
  return Json{{"reconstruction", log.reconstruction}, {"supervised", log.supervised},
              {"generator", log.generator},           {"embedder", log.embedder},
              {"discriminator", log.discriminator},   {"discriminator_updates", log.discriminator_updates}};
}

void from_json(const Json& j, SyntheticSpec& out) {
  Fields f(j, "synthetic");
  f.get("n_per_class", out.n_per_class);
  f.get("length", out.length);
  f.get("bump_interval", out.bump_interval);
  f.get("bump_height", out.bump_height);
  f.get("noise_sigma", out.noise_sigma);
  f.get("seed", out.seed);
  f.finish();
}

void from_json(const Json& j, RstConfig& out) {
  Fields f(j, "shapelets");
  f.get("lengths", out.lengths);
  f.get("max_candidates", out.max_candidates);
  f.get("n_keep", out.n_keep);
  f.get("time_budget", out.time_budget);
  f.get("seed", out.seed);
  f.get("overlap_threshold", out.overlap_threshold);
  f.get("z_normalize", out.z_normalize);
  f.get("balance_classes", out.balance_classes);
  f.finish();
}

void from_json(const Json& j, TimeGanConfig& out) {
  Fields f(j, "gan");
  f.get("hidden_dim", out.hidden_dim);
  f.get("num_layers", out.num_layers);
  f.get("z_dim", out.z_dim);
  f.get("iters_embed", out.iters_embed);
  f.get("iters_supervised", out.iters_supervised);
  f.get("iters_joint", out.iters_joint);
  f.get("batch_size", out.batch_size);
  f.get("lr", out.lr);
  f.get("seed", out.seed);
  f.get("lambda_sup", out.lambda_sup);
  f.get("lambda_moment", out.lambda_moment);
  f.get("gamma", out.gamma);
  f.get("d_threshold", out.d_threshold);
  f.finish();
}

void from_json(const Json& j, CnnConfig& out) {
  Fields f(j, "cnn");
  f.get("filters", out.filters);
  f.get("kernel", out.kernel);
  f.get("epochs", out.epochs);
  f.get("batch_size", out.batch_size);
  f.get("lr", out.lr);
  f.get("seed", out.seed);
  f.finish();
}

void from_json(const Json& j, ExplainConfig& out) {
  Fields f(j, "explain");
  f.get("m", out.m);
  f.get("eps", out.eps);
  f.get("sample_seed", out.sample_seed);
  f.finish();
}

void from_json(const Json& j, IForestConfig& out) {
  Fields f(j, "iforest");
  f.get("n_trees", out.n_trees);
  f.get("subsample", out.subsample);
  f.get("seed", out.seed);
  f.finish();
}

std::string metric_csv(const MetricsReport& r, const std::string& metric) {
  std::string out = "dataset,classifier,method,value\r\n";
  for (const auto& c : r.cells) {
    std::optional<double> v;
    if (metric == "closeness") v = c.closeness;
    else if (metric == "sparsity") v = c.sparsity;
    else if (metric == "plausibility") v = c.plausibility;
    else if (metric == "sensibility") v = c.error ? std::nullopt : std::optional<double>(c.sensibility);
    else throw UsageError("unknown metric '" + metric + "'");
    out += csv_field(c.dataset) + "," + csv_field(c.classifier) + "," + csv_field(c.method) + "," +
           (v ? format_double(*v) : std::string()) + "\r\n";
  }
  return out;
}

}  // namespace timecf
