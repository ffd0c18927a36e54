#include "dsbayes/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <sstream>

#include "dsbayes/error.hpp"

namespace dsbayes {

BinaryMetrics binary_metrics(const Matrix& confusion, std::span<const double> prevalence) {
  if (confusion.rows() != 2 || confusion.cols() != 2) {
    throw Error(ErrorKind::kUnsupportedArity, "binary metrics need K = 2, got a " +
                                                  std::to_string(confusion.rows()) + " x " +
                                                  std::to_string(confusion.cols()) + " matrix");
  }
  if (!prevalence.empty() && prevalence.size() != 2) {
    throw Error(ErrorKind::kShape, "prevalence must have 2 entries");
  }
  BinaryMetrics m;
  m.fnr = confusion(1, 0);
  m.fpr = confusion(0, 1);
  m.recall = 1.0 - m.fnr;
  m.balanced_accuracy = 1.0 - (m.fpr + m.fnr) / 2.0;
  if (!prevalence.empty()) {
    const double true_positive = prevalence[1] * confusion(1, 1);
    const double false_positive = prevalence[0] * confusion(0, 1);
    const double called_positive = true_positive + false_positive;
    if (called_positive > 0.0) m.precision = true_positive / called_positive;
  }
  m.competence = (confusion(0, 0) + confusion(1, 1)) / 2.0;
  return m;
}

double percentile_rank(double value, std::span<const double> pool) {
  if (pool.empty()) throw Error(ErrorKind::kConfig, "percentile reference pool is empty");
  double below = 0.0;
  double equal = 0.0;
  for (double h : pool) {
    if (h < value) {
      below += 1.0;
    } else if (h == value) {
      equal += 1.0;
    }
  }
  return 100.0 * (below + 0.5 * equal) / static_cast<double>(pool.size());
}

std::optional<double> pabak(const SparseAnnotationSet& data) {
  if (data.n_categories() != 2) {
    throw Error(ErrorKind::kUnsupportedArity, "PABAK is defined here for K = 2");
  }
  // Integer pair counts keep the statistic exactly symmetric in the labels.
  std::uint64_t agreeing = 0;
  std::uint64_t pairs = 0;
  for (std::size_t i = 0; i < data.n_items(); ++i) {
    std::uint64_t ones = 0;
    std::uint64_t total = 0;
    for (const auto& a : data.item_annotations(i)) {
      ones += a.label;
      ++total;
    }
    const std::uint64_t zeros = total - ones;
    agreeing += ones * (ones - (ones > 0 ? 1 : 0)) / 2 + zeros * (zeros - (zeros > 0 ? 1 : 0)) / 2;
    pairs += total * (total - (total > 0 ? 1 : 0)) / 2;
  }
  if (pairs == 0) return std::nullopt;
  const double observed = static_cast<double>(agreeing) / static_cast<double>(pairs);
  return 2.0 * observed - 1.0;
}

AnnotatorMetrics evaluate_annotator(const ProbabilityParams& params, std::size_t target,
                                    std::span<const std::size_t> humans) {
  const auto& conf = params.confusion;
  if (target >= conf.n_annotators()) {
    throw Error(ErrorKind::kLookup, "unknown annotator " + std::to_string(target));
  }
  AnnotatorMetrics out;
  out.annotator = target;
  out.metrics = binary_metrics(conf.slice(target), params.prevalence);
  if (!humans.empty()) {
    std::vector<double> pool;
    pool.reserve(humans.size());
    for (std::size_t h : humans) {
      if (h >= conf.n_annotators()) {
        throw Error(ErrorKind::kLookup, "unknown annotator " + std::to_string(h));
      }
      pool.push_back(binary_metrics(conf.slice(h), params.prevalence).balanced_accuracy);
    }
    out.percentile = percentile_rank(out.metrics.balanced_accuracy, pool);
  }
  return out;
}

AnnotatorMetrics evaluate_annotator(const FitResult& fit, const SparseAnnotationSet& data,
                                    std::size_t target, std::span<const std::size_t> humans) {
  check_dimensions(fit.params, data);
  return evaluate_annotator(normalize(fit.params), target, humans);
}

MetricsReport build_report(const ProbabilityParams& params, std::span<const std::string> names,
                           std::span<const AnnotatorKind> kinds, std::string foundation,
                           std::string dataset) {
  const std::size_t j_count = params.confusion.n_annotators();
  if (names.size() != j_count || kinds.size() != j_count) {
    throw Error(ErrorKind::kShape, "annotator registry has " + std::to_string(names.size()) +
                                       " entries but the fit has " + std::to_string(j_count));
  }
  std::vector<std::size_t> humans;
  for (std::size_t j = 0; j < j_count; ++j) {
    if (kinds[j] == AnnotatorKind::kHuman) humans.push_back(j);
  }

  MetricsReport report;
  report.foundation = std::move(foundation);
  report.dataset = std::move(dataset);
  for (std::size_t j = 0; j < j_count; ++j) {
    const bool is_model = kinds[j] == AnnotatorKind::kModel;
    auto row = evaluate_annotator(params, j, is_model ? std::span<const std::size_t>(humans)
                                                      : std::span<const std::size_t>());
    row.name = names[j];
    row.kind = kinds[j];
    report.annotators.push_back(std::move(row));
  }

  if (!humans.empty()) {
    BinaryMetrics avg;
    double precision_sum = 0.0;
    std::size_t precision_count = 0;
    for (std::size_t h : humans) {
      const auto& m = report.annotators[h].metrics;
      avg.balanced_accuracy += m.balanced_accuracy;
      avg.recall += m.recall;
      avg.fpr += m.fpr;
      avg.fnr += m.fnr;
      avg.competence += m.competence;
      if (m.precision) {
        precision_sum += *m.precision;
        ++precision_count;
      }
    }
    const double n = static_cast<double>(humans.size());
    avg.balanced_accuracy /= n;
    avg.recall /= n;
    avg.fpr /= n;
    avg.fnr /= n;
    avg.competence /= n;
    if (precision_count > 0) avg.precision = precision_sum / static_cast<double>(precision_count);
    report.human_average = avg;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

using Table = std::vector<std::vector<std::string>>;

std::string format_number(double value, int digits) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << value;
  return out.str();
}

std::string format_optional(const std::optional<double>& value, int digits) {
  return value ? format_number(*value, digits) : std::string("-");
}

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\n") == std::string::npos) return value;
  std::string quoted = "\"";
  for (char c : value) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + '"';
}

std::string render_csv(const Table& table) {
  std::string out;
  for (const auto& row : table) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out += ',';
      out += csv_field(row[c] == "-" ? std::string() : row[c]);
    }
    out += '\n';
  }
  return out;
}

std::string render_text(const Table& table) {
  std::vector<std::size_t> widths;
  for (const auto& row : table) {
    widths.resize(std::max(widths.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < table.size(); ++r) {
    const auto& row = table[r];
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == 0) {
        out << std::left << std::setw(static_cast<int>(widths[c])) << row[c];
      } else {
        out << "  " << std::right << std::setw(static_cast<int>(widths[c])) << row[c];
      }
    }
    out << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t w : widths) total += w + 2;
      out << std::string(total > 2 ? total - 2 : 0, '-') << '\n';
    }
  }
  return out.str();
}

std::string kind_name(AnnotatorKind kind) { return kind == AnnotatorKind::kModel ? "model" : "human"; }

std::vector<std::string> metric_cells(const BinaryMetrics& m) {
  return {format_number(m.balanced_accuracy, 4), format_optional(m.precision, 4),
          format_number(m.recall, 4),            format_number(m.fpr, 4),
          format_number(m.fnr, 4),               format_number(m.competence, 4)};
}

Table report_table(const MetricsReport& report) {
  Table table{{"annotator", "kind", "balanced_accuracy", "precision", "recall", "fpr", "fnr",
               "competence", "percentile"}};
  for (const auto& a : report.annotators) {
    std::vector<std::string> row{a.name, kind_name(a.kind)};
    for (auto& cell : metric_cells(a.metrics)) row.push_back(std::move(cell));
    row.push_back(format_optional(a.percentile, 1));
    table.push_back(std::move(row));
  }
  if (report.human_average) {
    std::vector<std::string> row{"Human Avg", "human"};
    for (auto& cell : metric_cells(*report.human_average)) row.push_back(std::move(cell));
    row.push_back("-");
    table.push_back(std::move(row));
  }
  return table;
}

nlohmann::ordered_json metrics_json(const BinaryMetrics& m) {
  nlohmann::ordered_json j;
  j["balanced_accuracy"] = m.balanced_accuracy;
  j["precision"] = m.precision ? nlohmann::ordered_json(*m.precision) : nlohmann::ordered_json();
  j["recall"] = m.recall;
  j["fpr"] = m.fpr;
  j["fnr"] = m.fnr;
  j["competence"] = m.competence;
  return j;
}

nlohmann::ordered_json report_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["dataset"] = report.dataset;
  j["foundation"] = report.foundation;
  j["annotators"] = nlohmann::ordered_json::array();
  for (const auto& a : report.annotators) {
    nlohmann::ordered_json row;
    row["annotator"] = a.name;
    row["kind"] = kind_name(a.kind);
    row["metrics"] = metrics_json(a.metrics);
    row["percentile"] = a.percentile ? nlohmann::ordered_json(*a.percentile) : nlohmann::ordered_json();
    j["annotators"].push_back(std::move(row));
  }
  j["human_average"] =
      report.human_average ? metrics_json(*report.human_average) : nlohmann::ordered_json();
  return j;
}

std::vector<std::string> model_names(std::span<const MetricsReport> reports) {
  std::vector<std::string> names;
  for (const auto& r : reports) {
    for (const auto& a : r.annotators) {
      if (a.kind == AnnotatorKind::kModel &&
          std::find(names.begin(), names.end(), a.name) == names.end()) {
        names.push_back(a.name);
      }
    }
  }
  return names;
}

const AnnotatorMetrics* find_row(const MetricsReport& report, const std::string& name) {
  for (const auto& a : report.annotators) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

Table accuracy_table(std::span<const MetricsReport> reports) {
  Table table{{"model", "metric"}};
  for (const auto& r : reports) table[0].push_back(r.foundation);
  for (const auto& name : model_names(reports)) {
    std::vector<std::string> acc{name, "Acc%"};
    std::vector<std::string> pct{name, "Pct"};
    for (const auto& r : reports) {
      const auto* row = find_row(r, name);
      acc.push_back(row ? format_number(100.0 * row->metrics.balanced_accuracy, 1) : "-");
      pct.push_back(row ? format_optional(row->percentile, 1) : "-");
    }
    table.push_back(std::move(acc));
    table.push_back(std::move(pct));
  }
  std::vector<std::string> human{"Human", "Avg%"};
  for (const auto& r : reports) {
    human.push_back(r.human_average ? format_number(100.0 * r.human_average->balanced_accuracy, 1)
                                    : "-");
  }
  table.push_back(std::move(human));
  return table;
}

Table error_rate_table(std::span<const MetricsReport> reports) {
  Table table{{"model"}};
  for (const auto& r : reports) {
    table[0].push_back(r.foundation + " FNR");
    table[0].push_back(r.foundation + " FPR");
  }
  auto add_row = [&](const std::string& label, auto&& lookup) {
    std::vector<std::string> row{label};
    for (const auto& r : reports) {
      const BinaryMetrics* m = lookup(r);
      row.push_back(m ? format_number(100.0 * m->fnr, 1) : "-");
      row.push_back(m ? format_number(100.0 * m->fpr, 1) : "-");
    }
    table.push_back(std::move(row));
  };
  for (const auto& name : model_names(reports)) {
    add_row(name, [&](const MetricsReport& r) -> const BinaryMetrics* {
      const auto* row = find_row(r, name);
      return row ? &row->metrics : nullptr;
    });
  }
  add_row("Human Baseline", [](const MetricsReport& r) -> const BinaryMetrics* {
    return r.human_average ? &*r.human_average : nullptr;
  });
  return table;
}

}  // namespace

std::string report_to_csv(const MetricsReport& report) { return render_csv(report_table(report)); }
std::string report_to_text(const MetricsReport& report) { return render_text(report_table(report)); }
std::string report_to_json(const MetricsReport& report) { return report_json(report).dump(2) + "\n"; }

std::string accuracy_table_csv(std::span<const MetricsReport> reports) {
  return render_csv(accuracy_table(reports));
}
std::string accuracy_table_text(std::span<const MetricsReport> reports) {
  return render_text(accuracy_table(reports));
}
std::string error_rate_table_csv(std::span<const MetricsReport> reports) {
  return render_csv(error_rate_table(reports));
}
std::string error_rate_table_text(std::span<const MetricsReport> reports) {
  return render_text(error_rate_table(reports));
}

std::string reports_to_json(std::span<const MetricsReport> reports) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["reports"] = nlohmann::ordered_json::array();
  for (const auto& r : reports) j["reports"].push_back(report_json(r));
  return j.dump(2) + "\n";
}

}  // namespace dsbayes
