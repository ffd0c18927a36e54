#include "dsbayes/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <future>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "dsbayes/corpus.hpp"
#include "dsbayes/documents.hpp"
#include "dsbayes/error.hpp"
#include "dsbayes/inference.hpp"
#include "dsbayes/llm_client.hpp"
#include "dsbayes/manifest.hpp"
#include "dsbayes/metrics.hpp"
#include "dsbayes/synth.hpp"

namespace dsbayes::cli {

namespace fs = std::filesystem;

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
  std::uint64_t z = root + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

struct CorpusOptions {
  std::string input;
  std::string items;
  std::string annotators;
  std::size_t k = 0;

  void add_to(CLI::App& cmd, bool input_required = true) {
    auto* opt = cmd.add_option("--input", input, "Canonical records file or triples file");
    if (input_required) opt->required();
    cmd.add_option("--items", items, "Items file (item_id,text)");
    cmd.add_option("--annotators", annotators, "Annotators file (annotator_id,kind)");
  }

  bool is_triples() const { return looks_like_triples(input); }

  MultiLabelCorpus load() const {
    CanonicalPaths paths{input, std::nullopt, std::nullopt};
    if (!items.empty()) paths.items = fs::path(items);
    if (!annotators.empty()) paths.annotators = fs::path(annotators);
    return load_canonical(paths);
  }

  void record_inputs(RunManifest& manifest) const {
    if (!input.empty()) manifest.add_input(input);
    if (!items.empty()) manifest.add_input(items);
    if (!annotators.empty()) manifest.add_input(annotators);
  }
};

BinaryTask triples_task(const CorpusOptions& options) {
  auto triples = load_triples(options.input, options.k);
  BinaryTask task;
  task.name = "triples";
  task.data = std::move(triples.data);
  task.item_ids = std::move(triples.item_ids);
  task.annotator_ids = std::move(triples.annotator_ids);
  task.annotator_kinds = std::move(triples.annotator_kinds);
  return task;
}

std::string config_snapshot(const CLI::App& cmd) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const CLI::Option* opt : cmd.get_options()) {
    const std::string name = opt->get_name();
    if (name == "--help" || name.empty()) continue;
    if (opt->count() > 0) {
      const auto& results = opt->results();
      if (opt->get_expected_max() > 1 || results.size() > 1) {
        j[name] = results;
      } else {
        j[name] = results.empty() ? std::string("true") : results.front();
      }
    } else {
      j[name] = opt->get_default_str();
    }
  }
  return j.dump();
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (const auto& part : split_list(text)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw Error(ErrorKind::kConfig, what + ": cannot parse '" + part + "' as a number");
    }
  }
  return out;
}

std::string capitalized(std::string_view name) {
  std::string out(name);
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateOptions {
  std::size_t n_items = 1000;
  std::size_t n_annotators = 5;
  std::size_t k = 2;
  std::string prevalence;
  std::string diag = "0.8";
  double coverage = 1.0;
  std::uint64_t seed = 0;
  std::size_t model_annotators = 0;
  std::string output;
};

void cmd_simulate(const SimulateOptions& o, RunManifest& manifest, std::ostream& out,
                  std::ostream& err) {
  if (o.k < 2) throw Error(ErrorKind::kConfig, "--k must be >= 2");
  if (o.model_annotators > o.n_annotators) {
    throw Error(ErrorKind::kConfig, "--model-annotators exceeds --n-annotators");
  }
  std::vector<double> prevalence = o.prevalence.empty()
                                       ? std::vector<double>(o.k, 1.0 / static_cast<double>(o.k))
                                       : parse_doubles(o.prevalence, "--prevalence");
  if (prevalence.size() != o.k) throw Error(ErrorKind::kConfig, "--prevalence needs K values");
  std::vector<double> diagonal = parse_doubles(o.diag, "--diag");
  if (diagonal.size() == 1) diagonal.assign(o.n_annotators, diagonal.front());
  if (diagonal.size() != o.n_annotators) {
    throw Error(ErrorKind::kConfig, "--diag needs one value or one per annotator");
  }
  const auto spec = make_symmetric_spec(o.n_items, prevalence, diagonal, o.coverage, o.seed);
  manifest.seed = o.seed;

  const fs::path dir(o.output);
  std::vector<std::string> item_ids(o.n_items);
  for (std::size_t i = 0; i < o.n_items; ++i) item_ids[i] = "item_" + std::to_string(i);
  std::vector<std::string> annotator_ids(o.n_annotators);
  std::vector<AnnotatorKind> kinds(o.n_annotators, AnnotatorKind::kHuman);
  for (std::size_t j = 0; j < o.n_annotators; ++j) {
    const bool model = j >= o.n_annotators - o.model_annotators;
    annotator_ids[j] = (model ? "model_" : "annotator_") + std::to_string(j);
    if (model) kinds[j] = AnnotatorKind::kModel;
  }

  std::vector<fs::path> artifacts;
  auto emit = [&](const fs::path& path, const std::string& contents) {
    write_file(path, contents);
    artifacts.push_back(path);
  };
  emit(dir / "spec.json", synth_spec_to_json(spec));

  if (o.k == 2) {
    const auto tasks = generate_tasks(spec, kFoundations.size());
    for (const auto& w : tasks.front().warnings) err << "warning: " << w << '\n';
    MultiLabelCorpus corpus;
    for (std::size_t i = 0; i < o.n_items; ++i) {
      corpus.items.push_back({item_ids[i], "synthetic item " + std::to_string(i)});
    }
    for (std::size_t j = 0; j < o.n_annotators; ++j) corpus.annotators.push_back({annotator_ids[j], kinds[j]});
    // All tasks share the coverage mask, so their triples line up one to one.
    const auto reference = tasks.front().data.triples();
    for (std::size_t n = 0; n < reference.size(); ++n) {
      AnnotationRecord record{item_ids[reference[n].item], annotator_ids[reference[n].annotator], {}};
      for (std::size_t t = 0; t < tasks.size(); ++t) {
        record.labels[kFoundations[t]] = tasks[t].data.triples()[n].label == 1;
      }
      corpus.records.push_back(std::move(record));
    }
    write_canonical(corpus, {dir / "records.csv", dir / "items.csv", dir / "annotators.csv"});
    artifacts.insert(artifacts.end(), {dir / "records.csv", dir / "items.csv", dir / "annotators.csv"});
    std::string truth = "# schema_version: 1\nitem_id";
    for (auto f : kFoundations) truth += "," + std::string(foundation_name(f));
    truth += "\n";
    for (std::size_t i = 0; i < o.n_items; ++i) {
      truth += item_ids[i];
      for (const auto& task : tasks) truth += "," + std::to_string(task.true_labels[i]);
      truth += "\n";
    }
    emit(dir / "truth.csv", truth);
    out << "simulated " << o.n_items << " items, " << o.n_annotators << " annotators, "
        << corpus.records.size() << " records -> " << (dir / "records.csv").string() << '\n';
  } else {
    const auto dataset = generate(spec);
    for (const auto& w : dataset.warnings) err << "warning: " << w << '\n';
    TripleCorpus triples{dataset.data, item_ids, annotator_ids, kinds};
    emit(dir / "triples.csv", serialize_triples(triples));
    std::string truth = "# schema_version: 1\nitem_id,label\n";
    for (std::size_t i = 0; i < o.n_items; ++i) {
      truth += item_ids[i] + "," + std::to_string(dataset.true_labels[i]) + "\n";
    }
    emit(dir / "truth.csv", truth);
    out << "simulated " << o.n_items << " items, " << o.n_annotators << " annotators, "
        << dataset.data.size() << " annotations -> " << (dir / "triples.csv").string() << '\n';
  }
  for (const auto& path : artifacts) manifest.add_artifact(path);
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitOptions {
  CorpusOptions corpus;
  std::string foundation = "all";
  double lr = 1e-2;
  std::size_t steps = 2000;
  std::uint64_t seed = 0;
  double prior_diag = 2.0;
  double prior_off = 0.5;
  double init_scale = 0.01;
  std::string sampler = "map";
  std::size_t samples = 2000;
  std::size_t burn_in = 500;
  std::size_t thin = 1;
  std::string output;
};

std::size_t task_index(std::string_view name) {
  const auto it = std::find(kTaskNames.begin(), kTaskNames.end(), name);
  return it == kTaskNames.end() ? kTaskNames.size() : static_cast<std::size_t>(it - kTaskNames.begin());
}

FitDocument fit_task(const BinaryTask& task, const FitOptions& o, std::uint64_t seed) {
  const auto priors = PriorSpec::defaults(task.data.n_categories(), o.prior_diag, o.prior_off);
  FitDocument doc;
  if (o.sampler == "map") {
    FitConfig cfg;
    cfg.learning_rate = o.lr;
    cfg.max_steps = o.steps;
    cfg.seed = seed;
    cfg.init_scale = o.init_scale;
    const auto fit = fit_map(task.data, priors, cfg);
    doc = make_fit_document(fit, task.name, task.data.n_items(), task.annotator_ids, task.annotator_kinds);
  } else {
    GibbsConfig cfg;
    cfg.n_samples = o.samples;
    cfg.burn_in = o.burn_in;
    cfg.thinning = o.thin;
    cfg.seed = seed;
    cfg.record_labels = false;
    const auto samples = sample_gibbs(task.data, priors, cfg);
    doc.task = task.name;
    doc.sampler = "gibbs";
    doc.seed = seed;
    doc.gibbs_config = cfg;
    doc.n_items = task.data.n_items();
    doc.annotator_ids = task.annotator_ids;
    doc.annotator_kinds = task.annotator_kinds;
    doc.params = samples.mean();
    doc.steps_run = cfg.n_samples;
    doc.converged = true;
  }
  doc.prior_diagonal = o.prior_diag;
  doc.prior_off_diagonal = o.prior_off;
  doc.reliability_warning = task.reliability_warning;
  return doc;
}

void cmd_fit(const FitOptions& o, RunManifest& manifest, std::ostream& out, std::ostream& err) {
  if (o.sampler != "map" && o.sampler != "gibbs") {
    throw Error(ErrorKind::kConfig, "--sampler must be 'map' or 'gibbs'");
  }
  o.corpus.record_inputs(manifest);
  manifest.seed = o.seed;

  std::vector<BinaryTask> tasks;
  if (o.corpus.is_triples()) {
    tasks.push_back(triples_task(o.corpus));
  } else {
    if (o.corpus.k != 0 && o.corpus.k != 2) {
      throw Error(ErrorKind::kConfig, "canonical corpora give binary tasks; --k must be 2");
    }
    const auto corpus = o.corpus.load();
    if (o.foundation == "all") {
      for (auto name : kTaskNames) tasks.push_back(build_task(corpus, name));
    } else {
      tasks.push_back(build_task(corpus, o.foundation));
    }
  }

  for (const auto& task : tasks) {
    if (task.reliability_warning) {
      err << "warning: task '" << task.name
          << "' comes from positive-only labels; negatives are indistinguishable from unlabelled "
             "content\n";
    }
    for (auto j : task.data.idle_annotators()) {
      err << "warning: annotator '" << task.annotator_ids[j] << "' has no annotations in task '"
          << task.name << "'\n";
    }
  }

  std::vector<std::future<FitDocument>> futures;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const std::uint64_t seed = derive_seed(o.seed, task_index(tasks[t].name));
    futures.push_back(std::async(std::launch::async, [&, t, seed] { return fit_task(tasks[t], o, seed); }));
  }
  std::vector<FitDocument> docs;
  for (auto& f : futures) docs.push_back(f.get());

  const fs::path dir(o.output);
  for (const auto& doc : docs) {
    const fs::path path = dir / ("fit_" + doc.task + ".json");
    write_file(path, doc.to_json());
    manifest.add_artifact(path);
    out << doc.task << ": sampler=" << doc.sampler << " steps=" << doc.steps_run;
    if (!doc.objective_trace.empty()) out << " log_joint=" << doc.objective_trace.back();
    out << " -> " << path.string() << '\n';
  }
}

// ---------------------------------------------------------------------------
// evaluate / rank
// ---------------------------------------------------------------------------

struct EvaluateOptions {
  CorpusOptions corpus;
  std::vector<std::string> fits;
  std::string dataset;
  std::string output;
};

std::vector<std::string> expand_fit_paths(const std::vector<std::string>& inputs) {
  std::vector<std::string> paths;
  for (const auto& p : inputs) {
    if (fs::is_directory(p)) {
      std::vector<std::string> found;
      for (const auto& entry : fs::directory_iterator(p)) {
        const auto name = entry.path().filename().string();
        if (name.rfind("fit_", 0) == 0 && entry.path().extension() == ".json") {
          found.push_back(entry.path().string());
        }
      }
      std::sort(found.begin(), found.end(), [](const std::string& a, const std::string& b) {
        const auto ta = task_index(fs::path(a).stem().string().substr(4));
        const auto tb = task_index(fs::path(b).stem().string().substr(4));
        return ta != tb ? ta < tb : a < b;
      });
      paths.insert(paths.end(), found.begin(), found.end());
    } else {
      paths.push_back(p);
    }
  }
  if (paths.empty()) throw Error(ErrorKind::kConfig, "no fit files given");
  return paths;
}

void cmd_evaluate(const EvaluateOptions& o, RunManifest& manifest, std::ostream& out) {
  o.corpus.record_inputs(manifest);
  const bool triples = o.corpus.is_triples();
  std::optional<MultiLabelCorpus> corpus;
  if (!triples) corpus = o.corpus.load();
  const std::string dataset =
      o.dataset.empty() ? fs::path(o.corpus.input).stem().string() : o.dataset;

  std::vector<MetricsReport> reports;
  for (const auto& path : expand_fit_paths(o.fits)) {
    manifest.add_input(path);
    const auto doc = FitDocument::from_json(read_file(path));
    const BinaryTask task = triples ? triples_task(o.corpus) : build_task(*corpus, doc.task);
    if (task.annotator_ids != doc.annotator_ids) {
      throw Error(ErrorKind::kValidation, "annotator registry mismatch between '" + path +
                                              "' and the corpus for task '" + doc.task + "'");
    }
    reports.push_back(build_report(doc.params, task.annotator_ids, task.annotator_kinds,
                                   capitalized(doc.task), dataset));
  }

  const fs::path dir(o.output);
  auto emit = [&](const std::string& name, const std::string& contents) {
    write_file(dir / name, contents);
    manifest.add_artifact(dir / name);
  };
  for (const auto& r : reports) {
    std::string task = r.foundation;
    std::transform(task.begin(), task.end(), task.begin(), [](unsigned char c) { return std::tolower(c); });
    out << "== " << r.dataset << " / " << r.foundation << " ==\n" << report_to_text(r) << '\n';
    emit("report_" + task + ".csv", report_to_csv(r));
  }
  out << "Balanced accuracy (%) and percentile\n" << accuracy_table_text(reports) << '\n';
  out << "False negative / false positive rates (%)\n" << error_rate_table_text(reports);
  emit("accuracy_table.csv", accuracy_table_csv(reports));
  emit("accuracy_table.txt", accuracy_table_text(reports));
  emit("error_rates.csv", error_rate_table_csv(reports));
  emit("error_rates.txt", error_rate_table_text(reports));
  emit("reports.json", reports_to_json(reports));
}

struct RankOptions {
  std::string fit;
  std::string output;
};

void cmd_rank(const RankOptions& o, RunManifest& manifest, std::ostream& out) {
  manifest.add_input(o.fit);
  const auto doc = FitDocument::from_json(read_file(o.fit));
  if (doc.params.confusion.n_categories() != 2) {
    throw Error(ErrorKind::kUnsupportedArity, "ranking needs a binary task");
  }
  std::vector<std::size_t> humans;
  for (std::size_t j = 0; j < doc.annotator_kinds.size(); ++j) {
    if (doc.annotator_kinds[j] == AnnotatorKind::kHuman) humans.push_back(j);
  }
  std::vector<AnnotatorMetrics> rows;
  for (std::size_t j = 0; j < doc.annotator_ids.size(); ++j) {
    auto row = evaluate_annotator(doc.params, j, humans);
    row.name = doc.annotator_ids[j];
    row.kind = doc.annotator_kinds[j];
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const AnnotatorMetrics& a, const AnnotatorMetrics& b) {
    return a.metrics.balanced_accuracy > b.metrics.balanced_accuracy;
  });
  std::ostringstream csv;
  csv << "rank,annotator,kind,balanced_accuracy,percentile\n";
  out << "rank  annotator  kind  balanced_accuracy  percentile\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string kind = row.kind == AnnotatorKind::kModel ? "model" : "human";
    std::ostringstream pct;
    if (row.percentile) {
      pct << std::fixed << std::setprecision(1) << *row.percentile;
    } else {
      pct << "-";
    }
    csv << r + 1 << ',' << row.name << ',' << kind << ',' << row.metrics.balanced_accuracy << ','
        << (row.percentile ? pct.str() : "") << '\n';
    out << r + 1 << "  " << row.name << "  " << kind << "  " << std::fixed << std::setprecision(4)
        << row.metrics.balanced_accuracy << "  " << pct.str() << '\n';
  }
  const fs::path path = fs::path(o.output) / ("rank_" + doc.task + ".csv");
  write_file(path, csv.str());
  manifest.add_artifact(path);
}

// ---------------------------------------------------------------------------
// pabak
// ---------------------------------------------------------------------------

struct PabakOptions {
  CorpusOptions corpus;
  std::string dataset;
  std::string output;
};

void cmd_pabak(const PabakOptions& o, RunManifest& manifest, std::ostream& out, std::ostream& err) {
  o.corpus.record_inputs(manifest);
  const auto corpus = o.corpus.load();
  const std::string dataset =
      o.dataset.empty() ? fs::path(o.corpus.input).stem().string() : o.dataset;

  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["dataset"] = dataset;
  j["pabak"] = nlohmann::ordered_json::object();
  std::string csv = "foundation," + dataset + "\n";
  std::ostringstream text;
  text << std::left << std::setw(12) << "Foundation" << std::right << std::setw(10) << dataset << '\n';
  text << std::string(22, '-') << '\n';
  for (auto name : kTaskNames) {
    const auto task = build_task(corpus, name);
    const auto value = pabak(task.data);
    const std::string label = capitalized(name);
    std::ostringstream cell;
    if (value) {
      cell << std::fixed << std::setprecision(2) << *value;
      j["pabak"][label] = *value;
    } else {
      cell << "-";
      j["pabak"][label] = nullptr;
      err << "warning: no co-annotated items for '" << name << "'; PABAK undefined\n";
    }
    csv += label + "," + (value ? cell.str() : "") + "\n";
    text << std::left << std::setw(12) << label << std::right << std::setw(10) << cell.str() << '\n';
  }
  out << text.str();
  const fs::path dir(o.output);
  write_file(dir / "pabak.csv", csv);
  write_file(dir / "pabak.json", j.dump(2) + "\n");
  manifest.add_artifact(dir / "pabak.csv");
  manifest.add_artifact(dir / "pabak.json");
}

// ---------------------------------------------------------------------------
// annotate / merge
// ---------------------------------------------------------------------------

struct AnnotateOptions {
  std::string items;
  std::string endpoint;
  std::string model;
  double temperature = 0.30;
  std::string prompt_template = "plain";
  std::size_t concurrency = 4;
  bool resume = false;
  std::size_t retries = 3;
  long long timeout_ms = 60'000;
  long long backoff_ms = 500;
  std::string credential_env;
  std::string auth_header = "Authorization";
  std::string auth_prefix = "Bearer ";
  std::string response_pointer = "/choices/0/message/content";
  std::string extra_body = "{}";
  std::size_t repeat = 1;
  std::string run_id;
  std::string output;
};

void cmd_annotate(const AnnotateOptions& o, RunManifest& manifest, std::ostream& out, std::ostream& err) {
  if (o.repeat < 1) throw Error(ErrorKind::kConfig, "--repeat must be >= 1");
  manifest.add_input(o.items);
  MultiLabelCorpus corpus = parse_canonical("item_id,annotator_id,care,fairness,loyalty,authority,sanctity\n",
                                            read_file(o.items), std::nullopt);
  ModelEndpointConfig cfg;
  cfg.endpoint_url = o.endpoint;
  cfg.model = o.model;
  cfg.temperature = o.temperature;
  cfg.max_retries = o.retries;
  cfg.timeout = std::chrono::milliseconds(o.timeout_ms);
  cfg.max_concurrent = o.concurrency;
  cfg.credential_env = o.credential_env;
  cfg.auth_header = o.auth_header;
  cfg.auth_prefix = o.auth_prefix;
  cfg.response_pointer = o.response_pointer;
  cfg.extra_body = o.extra_body;
  cfg.backoff_initial = std::chrono::milliseconds(o.backoff_ms);
  cfg.validate();

  AnnotationJob job;
  job.items = std::move(corpus.items);
  job.prompt_template = parse_prompt_template(o.prompt_template);
  job.output = o.output;
  const std::string base = o.run_id.empty() ? (o.model.empty() ? std::string("run") : o.model) : o.run_id;

  if (job.items.empty()) {
    // Nothing to query; still leave a valid (empty) response file behind.
    if (!(o.resume && fs::exists(job.output))) write_file(job.output, "");
  }
  for (std::size_t r = 0; r < o.repeat && !job.items.empty(); ++r) {
    job.run_id = base + "-r" + std::to_string(r);
    // Repeats after the first always append to the same file.
    job.resume = o.resume || r > 0;
    const auto summary = run_job(job, cfg, &err);
    out << job.run_id << ": attempted=" << summary.attempted << " succeeded=" << summary.succeeded
        << " failed=" << summary.failed << " skipped=" << summary.skipped << '\n';
  }
  manifest.add_artifact(job.output);
}

struct MergeOptions {
  CorpusOptions corpus;
  std::string responses;
  std::string model_name;
  std::string run_id;
  std::string output;
};

void cmd_merge(const MergeOptions& o, RunManifest& manifest, std::ostream& out) {
  o.corpus.record_inputs(manifest);
  manifest.add_input(o.responses);
  const auto corpus = o.corpus.load();
  const auto records = load_response_records(o.responses);
  const auto responses = successful_responses(records, o.run_id);
  const auto merged = merge_model_annotations(corpus, responses, o.model_name);
  const fs::path dir(o.output);
  const CanonicalPaths paths{dir / "records.csv", dir / "items.csv", dir / "annotators.csv"};
  write_canonical(merged, paths);
  manifest.add_artifact(paths.records);
  manifest.add_artifact(*paths.items);
  manifest.add_artifact(*paths.annotators);
  out << "merged " << responses.size() << " responses from " << records.size()
      << " records as annotator '" << o.model_name << "'\n";
}

int report_error(std::ostream& err, const Error& e) {
  err << "error [" << to_string(e.kind()) << "]: " << e.what() << '\n';
  return static_cast<int>(e.error_class());
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian annotation aggregation and annotator evaluation", "dsbayes"};
  app.require_subcommand(1);

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic annotation corpus");
  simulate->add_option("--n-items", sim.n_items)->capture_default_str();
  simulate->add_option("--n-annotators", sim.n_annotators)->capture_default_str();
  simulate->add_option("--k", sim.k, "Number of categories")->capture_default_str();
  simulate->add_option("--prevalence", sim.prevalence, "Comma-separated true prevalence");
  simulate->add_option("--diag", sim.diag, "Correct-label probability, one value or one per annotator")
      ->capture_default_str();
  simulate->add_option("--coverage", sim.coverage)->capture_default_str();
  simulate->add_option("--seed", sim.seed)->capture_default_str();
  simulate->add_option("--model-annotators", sim.model_annotators,
                       "Mark the last M annotators as models")
      ->capture_default_str();
  simulate->add_option("--output", sim.output, "Output directory")->required();

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit the annotation model per task");
  fit.corpus.add_to(*fit_cmd);
  fit_cmd->add_option("--k", fit.corpus.k, "Number of categories for triples input (0 infers)");
  fit_cmd->add_option("--foundation", fit.foundation)
      ->check(CLI::IsMember({"care", "fairness", "loyalty", "authority", "sanctity", "any", "all"}))
      ->capture_default_str();
  fit_cmd->add_option("--lr", fit.lr)->capture_default_str();
  fit_cmd->add_option("--steps", fit.steps)->capture_default_str();
  fit_cmd->add_option("--seed", fit.seed)->capture_default_str();
  fit_cmd->add_option("--prior-diag", fit.prior_diag)->capture_default_str();
  fit_cmd->add_option("--prior-off", fit.prior_off)->capture_default_str();
  fit_cmd->add_option("--init-scale", fit.init_scale)->capture_default_str();
  fit_cmd->add_option("--sampler", fit.sampler)->check(CLI::IsMember({"map", "gibbs"}))->capture_default_str();
  fit_cmd->add_option("--samples", fit.samples, "Gibbs sweeps including burn-in")->capture_default_str();
  fit_cmd->add_option("--burn-in", fit.burn_in)->capture_default_str();
  fit_cmd->add_option("--thin", fit.thin)->capture_default_str();
  fit_cmd->add_option("--output", fit.output, "Output directory")->required();

  EvaluateOptions eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Per-annotator metrics from fitted models");
  eval.corpus.add_to(*eval_cmd);
  eval_cmd->add_option("--k", eval.corpus.k);
  eval_cmd->add_option("--fit", eval.fits, "Fit files or directories holding fit_*.json")->required();
  eval_cmd->add_option("--dataset", eval.dataset, "Dataset label for the reports");
  eval_cmd->add_option("--output", eval.output, "Output directory")->required();

  RankOptions rank;
  auto* rank_cmd = app.add_subcommand("rank", "Rank annotators of one fit by balanced accuracy");
  rank_cmd->add_option("--fit", rank.fit)->required();
  rank_cmd->add_option("--output", rank.output, "Output directory")->required();

  PabakOptions pab;
  auto* pabak_cmd = app.add_subcommand("pabak", "Inter-annotator agreement per foundation");
  pab.corpus.add_to(*pabak_cmd);
  pabak_cmd->add_option("--dataset", pab.dataset);
  pabak_cmd->add_option("--output", pab.output, "Output directory")->required();

  AnnotateOptions ann;
  auto* annotate = app.add_subcommand("annotate", "Query a chat-completion endpoint for every item");
  annotate->add_option("--items", ann.items, "Items file (item_id,text)")->required();
  annotate->add_option("--endpoint", ann.endpoint, "Chat-completion URL")->required();
  annotate->add_option("--model", ann.model)->required();
  annotate->add_option("--temperature", ann.temperature)->capture_default_str();
  annotate->add_option("--template", ann.prompt_template)->check(CLI::IsMember({"plain", "reasoning"}))
      ->capture_default_str();
  annotate->add_option("--concurrency", ann.concurrency)->capture_default_str();
  annotate->add_flag("--resume", ann.resume, "Skip items already in the output");
  annotate->add_option("--retries", ann.retries)->capture_default_str();
  annotate->add_option("--timeout-ms", ann.timeout_ms)->capture_default_str();
  annotate->add_option("--backoff-ms", ann.backoff_ms)->capture_default_str();
  annotate->add_option("--credential-env", ann.credential_env, "Environment variable with the API key");
  annotate->add_option("--auth-header", ann.auth_header)->capture_default_str();
  annotate->add_option("--auth-prefix", ann.auth_prefix)->capture_default_str();
  annotate->add_option("--response-pointer", ann.response_pointer)->capture_default_str();
  annotate->add_option("--extra-body", ann.extra_body, "Extra request fields as a JSON object")
      ->capture_default_str();
  annotate->add_option("--repeat", ann.repeat)->capture_default_str();
  annotate->add_option("--run-id", ann.run_id);
  annotate->add_option("--output", ann.output, "Response file (JSON lines)")->required();

  MergeOptions merge;
  auto* merge_cmd = app.add_subcommand("merge", "Add model responses to a corpus as one annotator");
  merge.corpus.add_to(*merge_cmd);
  merge_cmd->add_option("--responses", merge.responses)->required();
  merge_cmd->add_option("--model-name", merge.model_name)->required();
  merge_cmd->add_option("--run-id", merge.run_id);
  merge_cmd->add_option("--output", merge.output, "Output directory")->required();

  std::string manifest_path;
  auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay->add_option("--manifest", manifest_path)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ErrorClass::kConfig);
  }

  try {
    if (replay->parsed()) {
      const auto recorded = RunManifest::from_json(read_file(manifest_path));
      std::ostringstream quiet;
      const int code = run(recorded.argv, out, err);
      if (code != 0) return code;
      bool identical = true;
      for (const auto& artifact : recorded.artifacts) {
        const bool same = fs::exists(artifact.path) && sha256_file(artifact.path) == artifact.sha256;
        identical = identical && same;
        out << (same ? "reproduced " : "differs    ") << artifact.path << '\n';
      }
      return identical ? 0 : static_cast<int>(ErrorClass::kData);
    }

    RunManifest manifest;
    manifest.argv = args;
    manifest.started_at = utc_timestamp();
    fs::path manifest_dir;
    const CLI::App* active = nullptr;
    if (simulate->parsed()) {
      active = simulate;
      cmd_simulate(sim, manifest, out, err);
      manifest_dir = sim.output;
    } else if (fit_cmd->parsed()) {
      active = fit_cmd;
      cmd_fit(fit, manifest, out, err);
      manifest_dir = fit.output;
    } else if (eval_cmd->parsed()) {
      active = eval_cmd;
      cmd_evaluate(eval, manifest, out);
      manifest_dir = eval.output;
    } else if (rank_cmd->parsed()) {
      active = rank_cmd;
      cmd_rank(rank, manifest, out);
      manifest_dir = rank.output;
    } else if (pabak_cmd->parsed()) {
      active = pabak_cmd;
      cmd_pabak(pab, manifest, out, err);
      manifest_dir = pab.output;
    } else if (annotate->parsed()) {
      active = annotate;
      cmd_annotate(ann, manifest, out, err);
      manifest_dir = fs::path(ann.output).parent_path();
    } else if (merge_cmd->parsed()) {
      active = merge_cmd;
      cmd_merge(merge, manifest, out);
      manifest_dir = merge.output;
    }
    manifest.command = active->get_name();
    manifest.config_json = config_snapshot(*active);
    manifest.finished_at = utc_timestamp();
    write_manifest(manifest, manifest_dir.empty() ? fs::path(".") : manifest_dir);
    return 0;
  } catch (const Error& e) {
    return report_error(err, e);
  } catch (const fs::filesystem_error& e) {
    err << "error [io]: " << e.what() << '\n';
    return static_cast<int>(ErrorClass::kData);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace dsbayes::cli
