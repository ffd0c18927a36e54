#include "dsbayes/annotations.hpp"

#include <algorithm>
#include <string>

#include "dsbayes/error.hpp"

namespace dsbayes {

SparseAnnotationSet::SparseAnnotationSet(std::size_t n_items, std::size_t n_annotators,
                                         std::size_t n_categories, std::vector<Annotation> triples)
    : n_items_(n_items),
      n_annotators_(n_annotators),
      n_categories_(n_categories),
      triples_(std::move(triples)) {
  if (n_categories_ < 1) throw Error(ErrorKind::kShape, "number of categories must be >= 1");
  for (const auto& t : triples_) {
    if (t.item >= n_items_ || t.annotator >= n_annotators_ || t.label >= n_categories_) {
      throw Error(ErrorKind::kValidation,
                  "triple (" + std::to_string(t.item) + ", " + std::to_string(t.annotator) + ", " +
                      std::to_string(t.label) + ") out of bounds for N=" + std::to_string(n_items_) +
                      ", J=" + std::to_string(n_annotators_) + ", K=" + std::to_string(n_categories_));
    }
  }
  std::sort(triples_.begin(), triples_.end(), [](const Annotation& a, const Annotation& b) {
    return a.item != b.item ? a.item < b.item : a.annotator < b.annotator;
  });
  for (std::size_t n = 1; n < triples_.size(); ++n) {
    if (triples_[n].item == triples_[n - 1].item &&
        triples_[n].annotator == triples_[n - 1].annotator) {
      throw Error(ErrorKind::kValidation, "duplicate annotation for (item " +
                                              std::to_string(triples_[n].item) + ", annotator " +
                                              std::to_string(triples_[n].annotator) + ")");
    }
  }
  offsets_.assign(n_items_ + 1, 0);
  for (const auto& t : triples_) ++offsets_[t.item + 1];
  for (std::size_t i = 0; i < n_items_; ++i) offsets_[i + 1] += offsets_[i];
}

std::span<const Annotation> SparseAnnotationSet::item_annotations(std::size_t item) const {
  if (item >= n_items_) throw Error(ErrorKind::kLookup, "item index " + std::to_string(item));
  return std::span<const Annotation>(triples_).subspan(offsets_[item],
                                                       offsets_[item + 1] - offsets_[item]);
}

std::vector<std::size_t> SparseAnnotationSet::annotator_counts() const {
  std::vector<std::size_t> counts(n_annotators_, 0);
  for (const auto& t : triples_) ++counts[t.annotator];
  return counts;
}

std::vector<std::size_t> SparseAnnotationSet::idle_annotators() const {
  std::vector<std::size_t> idle;
  const auto counts = annotator_counts();
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] == 0) idle.push_back(j);
  }
  return idle;
}

std::vector<std::size_t> SparseAnnotationSet::unannotated_items() const {
  std::vector<std::size_t> items;
  for (std::size_t i = 0; i < n_items_; ++i) {
    if (offsets_[i + 1] == offsets_[i]) items.push_back(i);
  }
  return items;
}

SparseAnnotationSet SparseAnnotationSet::permuted_labels(
    std::span<const std::size_t> permutation) const {
  if (permutation.size() != n_categories_) {
    throw Error(ErrorKind::kShape, "permutation length must equal K");
  }
  std::vector<Annotation> out(triples_.begin(), triples_.end());
  for (auto& t : out) t.label = permutation[t.label];
  return SparseAnnotationSet(n_items_, n_annotators_, n_categories_, std::move(out));
}

}  // namespace dsbayes
