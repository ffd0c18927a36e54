#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dsbayes/annotations.hpp"

namespace dsbayes {

enum class Foundation { kCare = 0, kFairness, kLoyalty, kAuthority, kSanctity };

inline constexpr std::array<Foundation, 5> kFoundations{
    Foundation::kCare, Foundation::kFairness, Foundation::kLoyalty, Foundation::kAuthority,
    Foundation::kSanctity};

/// Column name used in canonical files: "care", "fairness", ...
std::string_view foundation_name(Foundation f);
/// JSON key used in the classification prompt: "care/harm", ...
std::string_view foundation_prompt_key(Foundation f);
std::optional<Foundation> parse_foundation(std::string_view name);

/// Presence flag for each of the five foundations.
struct FoundationLabels {
  std::array<bool, 5> flags{};

  bool& operator[](Foundation f) { return flags[static_cast<std::size_t>(f)]; }
  bool operator[](Foundation f) const { return flags[static_cast<std::size_t>(f)]; }
  bool any() const;

  friend bool operator==(const FoundationLabels&, const FoundationLabels&) = default;
};

struct CorpusItem {
  std::string id;
  std::string text;
  friend bool operator==(const CorpusItem&, const CorpusItem&) = default;
};

struct Annotator {
  std::string id;
  AnnotatorKind kind = AnnotatorKind::kHuman;
  friend bool operator==(const Annotator&, const Annotator&) = default;
};

struct AnnotationRecord {
  std::string item_id;
  std::string annotator_id;
  FoundationLabels labels;
  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

/// Multi-foundation annotations with item and annotator registries.
struct MultiLabelCorpus {
  std::vector<CorpusItem> items;
  std::vector<AnnotationRecord> records;
  std::vector<Annotator> annotators;

  /// Throws a validation error if a record does not resolve or a pair repeats.
  void validate() const;
  std::optional<std::size_t> find_item(std::string_view id) const;
  std::optional<std::size_t> find_annotator(std::string_view id) const;

  friend bool operator==(const MultiLabelCorpus&, const MultiLabelCorpus&) = default;
};

/// Locations of a canonical corpus. Only `records` is required; without an
/// items file the items are the ones referenced by records, with empty text,
/// and without an annotators file every annotator is taken from the records.
struct CanonicalPaths {
  std::filesystem::path records;
  std::optional<std::filesystem::path> items;
  std::optional<std::filesystem::path> annotators;
};

inline constexpr int kSchemaVersion = 1;

MultiLabelCorpus load_canonical(const CanonicalPaths& paths);
MultiLabelCorpus load_canonical(const std::filesystem::path& records);
void write_canonical(const MultiLabelCorpus& corpus, const CanonicalPaths& paths);

/// In-memory variants of the three canonical files.
std::string serialize_records(const MultiLabelCorpus& corpus);
std::string serialize_items(const MultiLabelCorpus& corpus);
std::string serialize_annotators(const MultiLabelCorpus& corpus);
MultiLabelCorpus parse_canonical(std::string_view records, std::optional<std::string_view> items,
                                 std::optional<std::string_view> annotators);

/// One binary task over a corpus, with the index maps back to corpus ids.
struct BinaryTask {
  std::string name;
  SparseAnnotationSet data;
  std::vector<std::string> item_ids;
  std::vector<std::string> annotator_ids;
  std::vector<AnnotatorKind> annotator_kinds;
  /// Set when negatives cannot be told apart from unlabelled content.
  bool reliability_warning = false;
};

/// K = 2 task, label 1 iff the foundation flag is set.
BinaryTask to_binary_task(const MultiLabelCorpus& corpus, Foundation foundation);
/// K = 2 task, label 1 iff any foundation flag is set. Warns when the corpus
/// holds no all-negative record, i.e. it looks like a positive-only release.
BinaryTask derive_any(const MultiLabelCorpus& corpus);
/// "care" ... "sanctity" or "any".
BinaryTask build_task(const MultiLabelCorpus& corpus, std::string_view name);
inline constexpr std::array<std::string_view, 6> kTaskNames{"care",      "fairness", "loyalty",
                                                            "authority", "sanctity", "any"};

struct ModelResponse {
  std::string item_id;
  FoundationLabels labels;
};

/// Adds `model_name` as a model annotator carrying one record per response.
/// Items without a response stay unannotated by the model.
MultiLabelCorpus merge_model_annotations(const MultiLabelCorpus& corpus,
                                         std::span<const ModelResponse> responses,
                                         const std::string& model_name);

/// Extracts the first balanced {...} block from a model reply and reads the
/// five foundation keys of the classification prompt. An optional
/// "reasoning" key, code fences and surrounding prose are tolerated.
FoundationLabels parse_llm_response(std::string_view raw_text);

/// One line of an LLM response file.
struct ResponseRecord {
  std::string item_id;
  std::string run_id;
  std::string raw_text;
  double latency_ms = 0.0;
  std::size_t attempt_count = 0;
  std::optional<FoundationLabels> labels;
  std::optional<std::string> error;

  std::string to_json_line() const;
  static ResponseRecord from_json_line(std::string_view line, std::size_t line_number = 0);
};

std::vector<ResponseRecord> load_response_records(const std::filesystem::path& path);
/// Successful responses of one run (all runs when `run_id` is empty).
std::vector<ModelResponse> successful_responses(std::span<const ResponseRecord> records,
                                                std::string_view run_id = {});

/// Generic K-category triples file: item_id,annotator_id,label[,annotator_kind].
struct TripleCorpus {
  SparseAnnotationSet data;
  std::vector<std::string> item_ids;
  std::vector<std::string> annotator_ids;
  std::vector<AnnotatorKind> annotator_kinds;
};

/// `n_categories` of 0 infers K = max(2, largest label + 1).
TripleCorpus parse_triples(std::string_view text, std::size_t n_categories = 0);
TripleCorpus load_triples(const std::filesystem::path& path, std::size_t n_categories = 0);
std::string serialize_triples(const TripleCorpus& corpus);

/// True when the first header field of a delimited file says it is a triples file.
bool looks_like_triples(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace dsbayes
