#include "dsbayes/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <unordered_map>

#include "csv.hpp"
#include "dsbayes/error.hpp"

namespace dsbayes {

namespace {

constexpr std::array<std::string_view, 5> kFoundationNames{"care", "fairness", "loyalty",
                                                           "authority", "sanctity"};
constexpr std::array<std::string_view, 5> kPromptKeys{
    "care/harm", "fairness/cheating", "loyalty/betrayal", "authority/subversion",
    "sanctity/degradation"};

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t");
  return std::string(s.substr(begin, end - begin + 1));
}

// Checks "schema_version: N" (or "=") lines of a file preamble.
void check_preamble(const std::vector<std::string>& preamble, std::string_view what) {
  for (const auto& line : preamble) {
    const auto sep = line.find_first_of(":=");
    if (sep == std::string::npos) continue;
    if (trim(line.substr(0, sep)) != "schema_version") continue;
    const auto value = trim(line.substr(sep + 1));
    if (value != std::to_string(kSchemaVersion)) {
      throw ParseError(std::string(what) + ": unsupported schema_version " + value, line, 1);
    }
  }
}

std::string preamble_line() { return "# schema_version: " + std::to_string(kSchemaVersion) + "\n"; }

AnnotatorKind parse_kind(const std::string& value, std::size_t line) {
  if (value == "human" || value.empty()) return AnnotatorKind::kHuman;
  if (value == "model") return AnnotatorKind::kModel;
  throw ParseError("annotator kind must be 'human' or 'model', got '" + value + "'", value, line);
}

std::string_view kind_name(AnnotatorKind kind) {
  return kind == AnnotatorKind::kModel ? "model" : "human";
}

std::string pair_name(const std::string& item, const std::string& annotator) {
  return "(" + item + ", " + annotator + ")";
}

std::vector<std::string> read_header(detail::CsvReader& reader, std::string_view what) {
  std::vector<std::string> header;
  if (!reader.next(header)) throw ParseError(std::string(what) + ": missing header row", "", 1);
  check_preamble(reader.preamble(), what);
  for (auto& h : header) h = trim(h);
  return header;
}

std::vector<CorpusItem> parse_items(std::string_view text) {
  std::istringstream in{std::string(text)};
  detail::CsvReader reader(in);
  const auto header = read_header(reader, "items file");
  if (header != std::vector<std::string>{"item_id", "text"}) {
    throw ParseError("items file header must be 'item_id,text'", "", reader.row_line());
  }
  std::vector<CorpusItem> items;
  std::set<std::string> seen;
  std::vector<std::string> row;
  while (reader.next(row)) {
    if (row.size() != 2) {
      throw ParseError("expected 2 fields, got " + std::to_string(row.size()), "",
                       reader.row_line());
    }
    if (!seen.insert(row[0]).second) {
      throw Error(ErrorKind::kValidation, "duplicate item id '" + row[0] + "' at line " +
                                              std::to_string(reader.row_line()));
    }
    items.push_back({row[0], row[1]});
  }
  return items;
}

std::vector<Annotator> parse_annotators(std::string_view text) {
  std::istringstream in{std::string(text)};
  detail::CsvReader reader(in);
  const auto header = read_header(reader, "annotators file");
  if (header != std::vector<std::string>{"annotator_id", "kind"}) {
    throw ParseError("annotators file header must be 'annotator_id,kind'", "", reader.row_line());
  }
  std::vector<Annotator> annotators;
  std::set<std::string> seen;
  std::vector<std::string> row;
  while (reader.next(row)) {
    if (row.size() != 2) {
      throw ParseError("expected 2 fields, got " + std::to_string(row.size()), "",
                       reader.row_line());
    }
    if (!seen.insert(row[0]).second) {
      throw Error(ErrorKind::kValidation, "duplicate annotator id '" + row[0] + "' at line " +
                                              std::to_string(reader.row_line()));
    }
    annotators.push_back({row[0], parse_kind(row[1], reader.row_line())});
  }
  return annotators;
}

BinaryTask make_task(const MultiLabelCorpus& corpus, std::string name,
                     const std::function<bool(const FoundationLabels&)>& positive) {
  corpus.validate();
  BinaryTask task;
  task.name = std::move(name);
  std::unordered_map<std::string, std::size_t> item_index;
  std::unordered_map<std::string, std::size_t> annotator_index;
  for (std::size_t i = 0; i < corpus.items.size(); ++i) {
    item_index.emplace(corpus.items[i].id, i);
    task.item_ids.push_back(corpus.items[i].id);
  }
  for (std::size_t j = 0; j < corpus.annotators.size(); ++j) {
    annotator_index.emplace(corpus.annotators[j].id, j);
    task.annotator_ids.push_back(corpus.annotators[j].id);
    task.annotator_kinds.push_back(corpus.annotators[j].kind);
  }
  std::vector<Annotation> triples;
  triples.reserve(corpus.records.size());
  for (const auto& r : corpus.records) {
    triples.push_back({item_index.at(r.item_id), annotator_index.at(r.annotator_id),
                       positive(r.labels) ? std::size_t{1} : std::size_t{0}});
  }
  task.data = SparseAnnotationSet(corpus.items.size(), corpus.annotators.size(), 2,
                                  std::move(triples));
  return task;
}

nlohmann::ordered_json labels_json(const FoundationLabels& labels) {
  nlohmann::ordered_json j;
  for (auto f : kFoundations) j[std::string(foundation_name(f))] = labels[f];
  return j;
}

}  // namespace

std::string_view foundation_name(Foundation f) { return kFoundationNames[static_cast<std::size_t>(f)]; }
std::string_view foundation_prompt_key(Foundation f) { return kPromptKeys[static_cast<std::size_t>(f)]; }

std::optional<Foundation> parse_foundation(std::string_view name) {
  for (auto f : kFoundations) {
    if (foundation_name(f) == name) return f;
  }
  return std::nullopt;
}

bool FoundationLabels::any() const {
  return std::any_of(flags.begin(), flags.end(), [](bool b) { return b; });
}

// ---------------------------------------------------------------------------
// Corpus
// ---------------------------------------------------------------------------

std::optional<std::size_t> MultiLabelCorpus::find_item(std::string_view id) const {
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].id == id) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> MultiLabelCorpus::find_annotator(std::string_view id) const {
  for (std::size_t j = 0; j < annotators.size(); ++j) {
    if (annotators[j].id == id) return j;
  }
  return std::nullopt;
}

void MultiLabelCorpus::validate() const {
  std::set<std::string> item_ids;
  for (const auto& item : items) {
    if (!item_ids.insert(item.id).second) {
      throw Error(ErrorKind::kValidation, "duplicate item id '" + item.id + "'");
    }
  }
  std::set<std::string> annotator_ids;
  for (const auto& a : annotators) {
    if (!annotator_ids.insert(a.id).second) {
      throw Error(ErrorKind::kValidation, "duplicate annotator id '" + a.id + "'");
    }
  }
  std::set<std::pair<std::string, std::string>> pairs;
  std::vector<std::string> duplicates;
  for (const auto& r : records) {
    if (!item_ids.count(r.item_id)) {
      throw Error(ErrorKind::kValidation, "record references unknown item '" + r.item_id + "'");
    }
    if (!annotator_ids.count(r.annotator_id)) {
      throw Error(ErrorKind::kValidation,
                  "record references unknown annotator '" + r.annotator_id + "'");
    }
    if (!pairs.emplace(r.item_id, r.annotator_id).second) {
      duplicates.push_back(pair_name(r.item_id, r.annotator_id));
    }
  }
  if (!duplicates.empty()) {
    std::string list;
    for (const auto& d : duplicates) list += (list.empty() ? "" : ", ") + d;
    throw Error(ErrorKind::kValidation, "duplicate (item, annotator) records: " + list);
  }
}

MultiLabelCorpus parse_canonical(std::string_view records, std::optional<std::string_view> items,
                                 std::optional<std::string_view> annotators) {
  MultiLabelCorpus corpus;
  if (items) corpus.items = parse_items(*items);
  if (annotators) corpus.annotators = parse_annotators(*annotators);

  std::istringstream in{std::string(records)};
  detail::CsvReader reader(in);
  const auto header = read_header(reader, "records file");

  std::optional<std::size_t> item_col;
  std::optional<std::size_t> annotator_col;
  std::optional<std::size_t> kind_col;
  std::array<std::optional<std::size_t>, 5> flag_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto& name = header[c];
    if (name == "item_id") {
      item_col = c;
    } else if (name == "annotator_id") {
      annotator_col = c;
    } else if (name == "annotator_kind") {
      kind_col = c;
    } else if (auto f = parse_foundation(name)) {
      flag_cols[static_cast<std::size_t>(*f)] = c;
    } else {
      throw ParseError("unknown foundation key '" + name + "'", name, reader.row_line());
    }
  }
  if (!item_col || !annotator_col) {
    throw ParseError("header must contain item_id and annotator_id", "", reader.row_line());
  }
  for (auto f : kFoundations) {
    if (!flag_cols[static_cast<std::size_t>(f)]) {
      throw ParseError("header is missing foundation '" + std::string(foundation_name(f)) + "'",
                       "", reader.row_line());
    }
  }

  std::unordered_map<std::string, std::size_t> item_index;
  for (std::size_t i = 0; i < corpus.items.size(); ++i) item_index.emplace(corpus.items[i].id, i);
  std::unordered_map<std::string, std::size_t> annotator_index;
  for (std::size_t j = 0; j < corpus.annotators.size(); ++j) {
    annotator_index.emplace(corpus.annotators[j].id, j);
  }
  std::map<std::pair<std::string, std::string>, std::size_t> seen_pairs;
  std::vector<std::string> duplicates;

  std::vector<std::string> row;
  while (reader.next(row)) {
    const std::size_t line = reader.row_line();
    if (row.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(row.size()),
                       "", line);
    }
    AnnotationRecord record;
    record.item_id = row[*item_col];
    record.annotator_id = row[*annotator_col];
    if (record.item_id.empty() || record.annotator_id.empty()) {
      throw ParseError("empty item_id or annotator_id", "", line);
    }
    for (auto f : kFoundations) {
      const auto& value = row[*flag_cols[static_cast<std::size_t>(f)]];
      if (value != "0" && value != "1") {
        throw ParseError("flag '" + std::string(foundation_name(f)) + "' must be 0 or 1, got '" +
                             value + "'",
                         value, line);
      }
      record.labels[f] = value == "1";
    }
    const AnnotatorKind kind = kind_col ? parse_kind(row[*kind_col], line) : AnnotatorKind::kHuman;

    if (!item_index.count(record.item_id)) {
      if (items) {
        throw Error(ErrorKind::kValidation, "line " + std::to_string(line) + ": unknown item '" +
                                                record.item_id + "'");
      }
      item_index.emplace(record.item_id, corpus.items.size());
      corpus.items.push_back({record.item_id, ""});
    }
    if (auto it = annotator_index.find(record.annotator_id); it == annotator_index.end()) {
      if (annotators) {
        throw Error(ErrorKind::kValidation, "line " + std::to_string(line) +
                                                ": unknown annotator '" + record.annotator_id +
                                                "'");
      }
      annotator_index.emplace(record.annotator_id, corpus.annotators.size());
      corpus.annotators.push_back({record.annotator_id, kind});
    } else if (kind_col && corpus.annotators[it->second].kind != kind) {
      throw ParseError("annotator '" + record.annotator_id + "' has conflicting kinds", "", line);
    }

    auto [pos, inserted] = seen_pairs.emplace(std::pair{record.item_id, record.annotator_id}, line);
    if (!inserted) {
      duplicates.push_back(pair_name(record.item_id, record.annotator_id) + " at lines " +
                           std::to_string(pos->second) + " and " + std::to_string(line));
    }
    corpus.records.push_back(std::move(record));
  }
  if (!duplicates.empty()) {
    std::string list;
    for (const auto& d : duplicates) list += (list.empty() ? "" : "; ") + d;
    throw Error(ErrorKind::kValidation, "duplicate (item, annotator) records: " + list);
  }
  return corpus;
}

MultiLabelCorpus load_canonical(const CanonicalPaths& paths) {
  const std::string records = read_file(paths.records);
  std::optional<std::string> items;
  std::optional<std::string> annotators;
  if (paths.items) items = read_file(*paths.items);
  if (paths.annotators) annotators = read_file(*paths.annotators);
  return parse_canonical(records, items ? std::optional<std::string_view>(*items) : std::nullopt,
                         annotators ? std::optional<std::string_view>(*annotators) : std::nullopt);
}

MultiLabelCorpus load_canonical(const std::filesystem::path& records) {
  return load_canonical(CanonicalPaths{records, std::nullopt, std::nullopt});
}

std::string serialize_records(const MultiLabelCorpus& corpus) {
  std::unordered_map<std::string, AnnotatorKind> kinds;
  for (const auto& a : corpus.annotators) kinds.emplace(a.id, a.kind);
  std::string out = preamble_line();
  out += "item_id,annotator_id";
  for (auto f : kFoundations) out += "," + std::string(foundation_name(f));
  out += ",annotator_kind\n";
  for (const auto& r : corpus.records) {
    out += detail::csv_escape(r.item_id) + "," + detail::csv_escape(r.annotator_id);
    for (auto f : kFoundations) out += r.labels[f] ? ",1" : ",0";
    const auto it = kinds.find(r.annotator_id);
    out += ",";
    out += kind_name(it == kinds.end() ? AnnotatorKind::kHuman : it->second);
    out += "\n";
  }
  return out;
}

std::string serialize_items(const MultiLabelCorpus& corpus) {
  std::string out = preamble_line() + "item_id,text\n";
  for (const auto& item : corpus.items) {
    out += detail::csv_escape(item.id) + "," + detail::csv_escape(item.text) + "\n";
  }
  return out;
}

std::string serialize_annotators(const MultiLabelCorpus& corpus) {
  std::string out = preamble_line() + "annotator_id,kind\n";
  for (const auto& a : corpus.annotators) {
    out += detail::csv_escape(a.id) + "," + std::string(kind_name(a.kind)) + "\n";
  }
  return out;
}

void write_canonical(const MultiLabelCorpus& corpus, const CanonicalPaths& paths) {
  corpus.validate();
  write_file(paths.records, serialize_records(corpus));
  if (paths.items) write_file(*paths.items, serialize_items(corpus));
  if (paths.annotators) write_file(*paths.annotators, serialize_annotators(corpus));
}

// ---------------------------------------------------------------------------
// Tasks
// ---------------------------------------------------------------------------

BinaryTask to_binary_task(const MultiLabelCorpus& corpus, Foundation foundation) {
  return make_task(corpus, std::string(foundation_name(foundation)),
                   [foundation](const FoundationLabels& l) { return l[foundation]; });
}

BinaryTask derive_any(const MultiLabelCorpus& corpus) {
  auto task = make_task(corpus, "any", [](const FoundationLabels& l) { return l.any(); });
  task.reliability_warning =
      !corpus.records.empty() &&
      std::all_of(corpus.records.begin(), corpus.records.end(),
                  [](const AnnotationRecord& r) { return r.labels.any(); });
  return task;
}

BinaryTask build_task(const MultiLabelCorpus& corpus, std::string_view name) {
  if (name == "any") return derive_any(corpus);
  if (auto f = parse_foundation(name)) return to_binary_task(corpus, *f);
  throw Error(ErrorKind::kConfig, "unknown task '" + std::string(name) + "'");
}

MultiLabelCorpus merge_model_annotations(const MultiLabelCorpus& corpus,
                                         std::span<const ModelResponse> responses,
                                         const std::string& model_name) {
  if (model_name.empty()) throw Error(ErrorKind::kMerge, "model name is empty");
  if (corpus.find_annotator(model_name)) {
    throw Error(ErrorKind::kMerge, "annotator '" + model_name + "' already exists");
  }
  std::set<std::string> item_ids;
  for (const auto& item : corpus.items) item_ids.insert(item.id);
  std::set<std::string> answered;
  MultiLabelCorpus merged = corpus;
  merged.annotators.push_back({model_name, AnnotatorKind::kModel});
  for (const auto& response : responses) {
    if (!item_ids.count(response.item_id)) {
      throw Error(ErrorKind::kMerge, "response for unknown item '" + response.item_id + "'");
    }
    if (!answered.insert(response.item_id).second) {
      throw Error(ErrorKind::kMerge, "duplicate response for item '" + response.item_id + "'");
    }
    merged.records.push_back({response.item_id, model_name, response.labels});
  }
  return merged;
}

// ---------------------------------------------------------------------------
// LLM replies
// ---------------------------------------------------------------------------

namespace {

// First balanced {...} block, honouring JSON string literals.
std::optional<std::string> first_json_object(std::string_view text) {
  for (std::size_t start = text.find('{'); start != std::string_view::npos;
       start = text.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t n = start; n < text.size(); ++n) {
      const char c = text[n];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}') {
        if (--depth == 0) return std::string(text.substr(start, n - start + 1));
      }
    }
  }
  return std::nullopt;
}

// Drops commas that directly precede '}' or ']' outside string literals.
std::string strip_trailing_commas(const std::string& json) {
  std::string out;
  out.reserve(json.size());
  bool in_string = false;
  bool escaped = false;
  for (std::size_t n = 0; n < json.size(); ++n) {
    const char c = json[n];
    if (in_string) {
      out += c;
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') in_string = true;
    if (c == ',') {
      std::size_t next = json.find_first_not_of(" \t\r\n", n + 1);
      if (next != std::string::npos && (json[next] == '}' || json[next] == ']')) continue;
    }
    out += c;
  }
  return out;
}

}  // namespace

FoundationLabels parse_llm_response(std::string_view raw_text) {
  const auto block = first_json_object(raw_text);
  if (!block) throw ParseError("no JSON object in reply", std::string(raw_text));
  nlohmann::json object;
  try {
    object = nlohmann::json::parse(strip_trailing_commas(*block));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), std::string(raw_text));
  }
  FoundationLabels labels;
  for (auto f : kFoundations) {
    const std::string key(foundation_prompt_key(f));
    const auto it = object.find(key);
    if (it == object.end()) throw ParseError("missing key '" + key + "'", std::string(raw_text));
    if (!it->is_boolean()) {
      throw ParseError("key '" + key + "' is not a boolean", std::string(raw_text));
    }
    labels[f] = it->get<bool>();
  }
  for (const auto& [key, value] : object.items()) {
    const bool known = key == "reasoning" ||
                       std::find(kPromptKeys.begin(), kPromptKeys.end(), key) != kPromptKeys.end();
    if (!known) throw ParseError("unexpected key '" + key + "'", std::string(raw_text));
  }
  return labels;
}

std::string ResponseRecord::to_json_line() const {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["item_id"] = item_id;
  j["run_id"] = run_id;
  j["raw_text"] = raw_text;
  j["latency_ms"] = latency_ms;
  j["attempt_count"] = attempt_count;
  if (labels) j["labels"] = labels_json(*labels);
  if (error) j["error"] = *error;
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

ResponseRecord ResponseRecord::from_json_line(std::string_view line, std::size_t line_number) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid response record: ") + e.what(), std::string(line),
                     line_number);
  }
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion) {
      throw ParseError("unsupported schema_version", std::string(line), line_number);
    }
    ResponseRecord r;
    r.item_id = j.at("item_id").get<std::string>();
    r.run_id = j.value("run_id", std::string());
    r.raw_text = j.value("raw_text", std::string());
    r.latency_ms = j.value("latency_ms", 0.0);
    r.attempt_count = j.value("attempt_count", std::size_t{0});
    if (j.contains("labels")) {
      FoundationLabels labels;
      for (auto f : kFoundations) labels[f] = j.at("labels").at(std::string(foundation_name(f))).get<bool>();
      r.labels = labels;
    }
    if (j.contains("error")) r.error = j.at("error").get<std::string>();
    if (r.labels.has_value() == r.error.has_value()) {
      throw ParseError("record must carry exactly one of labels and error", std::string(line),
                       line_number);
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed response record: ") + e.what(), std::string(line),
                     line_number);
  }
}

std::vector<ResponseRecord> load_response_records(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<ResponseRecord> records;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    records.push_back(ResponseRecord::from_json_line(line, line_number));
  }
  return records;
}

std::vector<ModelResponse> successful_responses(std::span<const ResponseRecord> records,
                                                std::string_view run_id) {
  if (run_id.empty()) {
    std::set<std::string> runs;
    for (const auto& r : records) runs.insert(r.run_id);
    if (runs.size() > 1) {
      throw Error(ErrorKind::kConfig, "response file holds several runs; select one run id");
    }
  }
  std::vector<ModelResponse> out;
  for (const auto& r : records) {
    if (!run_id.empty() && r.run_id != run_id) continue;
    if (r.labels) out.push_back({r.item_id, *r.labels});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Triples
// ---------------------------------------------------------------------------

TripleCorpus parse_triples(std::string_view text, std::size_t n_categories) {
  std::istringstream in{std::string(text)};
  detail::CsvReader reader(in);
  const auto header = read_header(reader, "triples file");
  const bool with_kind =
      header == std::vector<std::string>{"item_id", "annotator_id", "label", "annotator_kind"};
  if (!with_kind && header != std::vector<std::string>{"item_id", "annotator_id", "label"}) {
    throw ParseError("triples header must be 'item_id,annotator_id,label[,annotator_kind]'", "",
                     reader.row_line());
  }
  TripleCorpus out;
  std::unordered_map<std::string, std::size_t> items;
  std::unordered_map<std::string, std::size_t> annotators;
  std::vector<Annotation> triples;
  std::size_t max_label = 0;
  std::vector<std::string> row;
  while (reader.next(row)) {
    const std::size_t line = reader.row_line();
    if (row.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields", "", line);
    }
    std::size_t label = 0;
    try {
      std::size_t used = 0;
      const long long parsed = std::stoll(row[2], &used);
      if (used != row[2].size() || parsed < 0) throw std::invalid_argument("label");
      label = static_cast<std::size_t>(parsed);
    } catch (const std::exception&) {
      throw ParseError("label must be a non-negative integer, got '" + row[2] + "'", row[2], line);
    }
    const AnnotatorKind kind = with_kind ? parse_kind(row[3], line) : AnnotatorKind::kHuman;
    auto [it_item, new_item] = items.emplace(row[0], out.item_ids.size());
    if (new_item) out.item_ids.push_back(row[0]);
    auto [it_ann, new_ann] = annotators.emplace(row[1], out.annotator_ids.size());
    if (new_ann) {
      out.annotator_ids.push_back(row[1]);
      out.annotator_kinds.push_back(kind);
    }
    max_label = std::max(max_label, label);
    triples.push_back({it_item->second, it_ann->second, label});
  }
  const std::size_t k = n_categories > 0 ? n_categories : std::max<std::size_t>(2, max_label + 1);
  out.data = SparseAnnotationSet(out.item_ids.size(), out.annotator_ids.size(), k, std::move(triples));
  return out;
}

TripleCorpus load_triples(const std::filesystem::path& path, std::size_t n_categories) {
  return parse_triples(read_file(path), n_categories);
}

std::string serialize_triples(const TripleCorpus& corpus) {
  std::string out = preamble_line() + "item_id,annotator_id,label,annotator_kind\n";
  for (const auto& t : corpus.data.triples()) {
    out += detail::csv_escape(corpus.item_ids[t.item]) + "," +
           detail::csv_escape(corpus.annotator_ids[t.annotator]) + "," + std::to_string(t.label) +
           "," + std::string(kind_name(corpus.annotator_kinds[t.annotator])) + "\n";
  }
  return out;
}

bool looks_like_triples(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  detail::CsvReader reader(in);
  std::vector<std::string> header;
  if (!reader.next(header)) return false;
  return std::find(header.begin(), header.end(), "label") != header.end();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write '" + path.string() + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorKind::kIo, "write failed for '" + path.string() + "'");
}

}  // namespace dsbayes
