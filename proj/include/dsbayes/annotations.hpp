#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dsbayes {

/// One observed label: annotator `annotator` assigned `label` to item `item`.
struct Annotation {
  std::size_t item = 0;
  std::size_t annotator = 0;
  std::size_t label = 0;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

/// Sparse set of (item, annotator, label) triples over N items, J annotators
/// and K categories.
///
/// Triples are stored sorted by (item, annotator) with per-item offsets, so
/// the annotations of one item form a contiguous span. Construction rejects
/// out-of-range indices and duplicate (item, annotator) pairs. Items without
/// any annotation are legal; they carry no evidence and their posterior falls
/// back to the prevalence.
class SparseAnnotationSet {
 public:
  SparseAnnotationSet() = default;
  SparseAnnotationSet(std::size_t n_items, std::size_t n_annotators, std::size_t n_categories,
                      std::vector<Annotation> triples);

  std::size_t n_items() const noexcept { return n_items_; }
  std::size_t n_annotators() const noexcept { return n_annotators_; }
  std::size_t n_categories() const noexcept { return n_categories_; }
  std::size_t size() const noexcept { return triples_.size(); }
  bool empty() const noexcept { return triples_.empty(); }

  std::span<const Annotation> triples() const noexcept { return triples_; }
  std::span<const Annotation> item_annotations(std::size_t item) const;

  /// Number of annotations made by each annotator.
  std::vector<std::size_t> annotator_counts() const;
  /// Annotators that labelled nothing.
  std::vector<std::size_t> idle_annotators() const;
  /// Items that received no annotation.
  std::vector<std::size_t> unannotated_items() const;

  /// Relabels categories: every label l becomes permutation[l].
  SparseAnnotationSet permuted_labels(std::span<const std::size_t> permutation) const;

 private:
  std::size_t n_items_ = 0;
  std::size_t n_annotators_ = 0;
  std::size_t n_categories_ = 2;
  std::vector<Annotation> triples_;
  std::vector<std::size_t> offsets_{0};
};

}  // namespace dsbayes

namespace dsbayes {

/// Whether an annotator is a person or a language model.
enum class AnnotatorKind { kHuman, kModel };

}  // namespace dsbayes
