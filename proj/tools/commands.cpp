#include "commands.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iostream>

#include "svg.hpp"
#include "timecf/parallel.hpp"

namespace timecf::cli {

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw InputError("cannot write " + path.string());
}

Json with_config(const RunConfig& c, const std::string& command, Json body) {
  Json j{{"command", command}, {"config", to_json(c)}};
  for (auto& [k, v] : body.items()) j[k] = v;
  return j;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::filesystem::path gan_file(const std::filesystem::path& dir, ClassLabel excluded) {
  return dir / ("gan_excl" + std::to_string(excluded.value) + ".tcf");
}

std::vector<ShapeletCandidate> shapelets_for(const RunConfig& c, const Dataset& train) {
  if (c.shapelets_file) {
    std::ifstream in(*c.shapelets_file);
    if (!in) throw InputError("cannot open shapelet file " + c.shapelets_file->string());
    try {
      return shapelets_from_json(Json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(c.shapelets_file->string() + ": " + e.what(), 0);
    }
  }
  RstConfig rst = c.rst;
  rst.threads = c.threads;
  return extract_top_shapelets(train, rst);
}

}  // namespace

RunConfig resolve_config(const Overrides& o) {
  RunConfig c;
  if (o.config) {
    c = load_run_config(*o.config);
  } else {
    c.data.synthetic = SyntheticSpec{};
  }
  if (o.seed) c.reseed(*o.seed);
  if (o.out) c.out = *o.out;
  if (o.threads) c.threads = *o.threads;
  if (o.instance) c.instance = *o.instance;
  if (o.classifier) c.classifier = *o.classifier;
  if (o.method) c.method = parse_method(*o.method);
  c.validate();
  return c;
}

int cmd_synth(const RunConfig& c, const Overrides& o) {
  if (!c.data.synthetic) throw UsageError("synth needs a synthetic data source in the config");
  SyntheticSpec spec = *c.data.synthetic;
  if (o.seed) spec.seed = *o.seed;
  SyntheticSpec test_spec = spec;
  test_spec.seed = spec.seed + 1;
  const Dataset train = make_synthetic_bump(spec);
  const Dataset test = make_synthetic_bump(test_spec);
  const auto train_path = c.out / (c.data.name + "_TRAIN.tsv");
  const auto test_path = c.out / (c.data.name + "_TEST.tsv");
  std::filesystem::create_directories(c.out);
  write_ucr_file(train_path, train);
  write_ucr_file(test_path, test);
  write_file(c.out / (c.data.name + "_synth.json"),
             with_config(c, "synth",
                         Json{{"train_spec", to_json(spec)},
                              {"test_spec", to_json(test_spec)},
                              {"train_file", train_path.filename().string()},
                              {"test_file", test_path.filename().string()},
                              {"train_rows", train.size()},
                              {"test_rows", test.size()}})
                     .dump(2) +
                 "\n");
  std::cout << "wrote " << train_path.string() << " (" << train.size() << " rows) and " << test_path.string() << " ("
            << test.size() << " rows)\n";
  return 0;
}

int cmd_explain(const RunConfig& c) {
  LabelCodec codec;
  const auto [train, test] = load_data(c, &codec);
  if (c.instance >= test.size())
    throw UsageError("instance " + std::to_string(c.instance) + " out of range (test set has " +
                     std::to_string(test.size()) + ")");
  const auto f = make_classifier(c.classifier, train, c.cnn);
  const TimeSeries& t = test[c.instance].series;
  const ClassLabel l = f->predict(t);

  ExplanationReport rep;
  Json extra = Json::object();
  if (c.method == Method::nun) {
    rep = explain_nun(t, l, train, *f, c.explain.eps);
  } else {
    const auto shapelets = shapelets_for(c, train);
    GanCache gans(c.gan, c.cache_gans);
    if (c.gan_dir && std::filesystem::exists(gan_file(*c.gan_dir, l))) {
      auto model = std::make_shared<const TimeGanModel>(TimeGanModel::load(gan_file(*c.gan_dir, l)));
      if (model->length() != train.series_length()) throw UsageError("saved TimeGAN length does not match the data");
      gans.insert(l, std::move(model));
      extra["gan_source"] = gan_file(*c.gan_dir, l).string();
    }
    ExplainConfig ec = c.explain;
    ec.threads = c.threads;
    rep = explain(t, l, train, *f, shapelets, gans, ec);
    extra["shapelets"] = to_json(shapelets);
  }

  Json body{{"instance", c.instance},
            {"true_label", test[c.instance].label.value},
            {"classifier", f->name()},
            {"label_codec", codec.raw},
            {"report", to_json(rep)}};
  for (auto& [k, v] : extra.items()) body[k] = v;
  const Json doc = with_config(c, "explain", body);
  write_file(c.out / "report.json", doc.dump(2) + "\n");
  const std::string title = "instance " + std::to_string(c.instance) + " (" + f->name() + ", " + to_string(rep.method) +
                            ", label " + std::to_string(l.value) + ")";
  write_file(c.out / "plot.svg",
             explanation_svg(t, rep.recommended ? &*rep.recommended : nullptr, title, to_json(c).dump()));

  std::cerr << "search " << rep.runtime.search_seconds << " s, gan " << rep.runtime.gan_seconds << " s\n";
  if (!rep.recommended) {
    std::cout << "no counterfactual found for instance " << c.instance << " (label " << l.value << ")\n";
    return 2;
  }
  const auto& r = *rep.recommended;
  std::cout << "instance " << c.instance << ": label " << l.value << " -> " << r.predicted_label.value << ", interval ["
            << r.interval.start << ", " << r.interval.end() << "), hamming " << r.hamming << ", l1 " << r.l1 << ", "
            << rep.results.size() << " candidates\n";
  return 0;
}

int cmd_benchmark(const RunConfig& c) {
  const auto [train, test] = load_data(c);
  const auto report = run_benchmark(train, test, benchmark_config(c));
  write_file(c.out / "metrics.json", with_config(c, "benchmark", Json{{"metrics", to_json(report)}}).dump(2) + "\n");
  write_file(c.out / "runtime.json", with_config(c, "benchmark", Json{{"runtime", to_json(report, true)["runtime"]}}).dump(2) + "\n");
  for (const std::string m : {"closeness", "sensibility", "plausibility", "sparsity"})
    write_file(c.out / (m + ".csv"), metric_csv(report, m));
  const std::string table = format_table(report);
  write_file(c.out / "metrics.txt", table);
  write_file(c.out / "config.json", to_json(c).dump(2) + "\n");
  std::cout << table << "total " << report.total_seconds << " s\n";
  return 0;
}

int cmd_extract_shapelets(const RunConfig& c) {
  const auto [train, test] = load_data(c);
  (void)test;
  RstConfig rst = c.rst;
  rst.threads = c.threads;
  const auto t0 = std::chrono::steady_clock::now();
  const auto shapelets = extract_top_shapelets(train, rst);
  const double secs = seconds_since(t0);
  write_file(c.out / "shapelets.json", with_config(c, "extract-shapelets", Json{{"shapelets", to_json(shapelets)}}).dump(2) + "\n");
  std::cout << "kept " << shapelets.size() << " shapelets in " << secs << " s\n";
  for (const auto& s : shapelets)
    std::cout << "  class " << s.class_label.value << " [" << s.interval.start << ", " << s.interval.end() << ") quality "
              << s.quality << "\n";
  return 0;
}

int cmd_train_gan(const RunConfig& c) {
  const auto [train, test] = load_data(c);
  (void)test;
  const auto labels = train.labels();
  std::vector<TrainingLog> logs(labels.size());
  std::vector<double> secs(labels.size());
  std::vector<std::optional<TimeGanModel>> models(labels.size());
  parallel_for(labels.size(), c.threads, [&](std::size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    models[i] = train_gan_excluding(train, labels[i], c.gan, &logs[i]);
    secs[i] = seconds_since(t0);
  });
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto path = gan_file(c.out, labels[i]);
    std::filesystem::create_directories(c.out);
    models[i]->save(path);
    write_file(c.out / ("gan_excl" + std::to_string(labels[i].value) + ".json"),
               with_config(c, "train-gan",
                           Json{{"excluded_label", labels[i].value},
                                {"model_file", path.filename().string()},
                                {"training_log", to_json(logs[i])}})
                       .dump(2) +
                   "\n");
    std::cout << "excluded label " << labels[i].value << ": " << path.string() << " (" << secs[i] << " s, reconstruction "
              << logs[i].reconstruction.front() << " -> " << logs[i].reconstruction.back() << ")\n";
  }
  return 0;
}

int run(std::vector<std::string> args) {
  CLI::App app{"Counterfactual explanations for time series classifiers", "timecf"};
  app.require_subcommand(1);
  Overrides o;
  std::string config, out, classifier, method;
  std::uint64_t seed = 0;
  std::size_t threads = 0, instance = 0;
  auto* opt_config = app.add_option("--config", config, "JSON run config");
  auto* opt_seed = app.add_option("--seed", seed, "seed for every component");
  auto* opt_out = app.add_option("--out", out, "output directory");
  auto* opt_threads = app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  auto* opt_instance = app.add_option("--instance", instance, "test instance index (explain)");
  auto* opt_classifier = app.add_option("--classifier", classifier, "classifier to explain")->check(CLI::IsMember({"1nn", "cnn"}));
  auto* opt_method = app.add_option("--method", method, "explanation method")->check(CLI::IsMember({"timecf", "nun"}));

  auto* synth = app.add_subcommand("synth", "write synthetic bump train/test files")->fallthrough();
  auto* explain_cmd = app.add_subcommand("explain", "explain one test instance")->fallthrough();
  auto* bench = app.add_subcommand("benchmark", "run every classifier x method over the test set")->fallthrough();
  auto* extract = app.add_subcommand("extract-shapelets", "run the random shapelet transform")->fallthrough();
  auto* train_gan = app.add_subcommand("train-gan", "train one TimeGAN per excluded label")->fallthrough();

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (*opt_config) o.config = config;
  if (*opt_seed) o.seed = seed;
  if (*opt_out) o.out = out;
  if (*opt_threads) o.threads = threads;
  if (*opt_instance) o.instance = instance;
  if (*opt_classifier) o.classifier = classifier;
  if (*opt_method) o.method = method;

  try {
    const RunConfig c = resolve_config(o);
    if (*synth) return cmd_synth(c, o);
    if (*explain_cmd) return cmd_explain(c);
    if (*bench) return cmd_benchmark(c);
    if (*extract) return cmd_extract_shapelets(c);
    if (*train_gan) return cmd_train_gan(c);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace timecf::cli
