#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hexar {

using IngredientVector = std::vector<std::uint8_t>;

struct Dataset {
  std::vector<std::string> features;
  std::vector<std::string> classes;
  std::vector<IngredientVector> rows;
  std::vector<std::size_t> labels;  // index into classes
};

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// CSV with header "f1,...,fd,label" and 0/1 feature cells. Classes are listed
// in order of first appearance.
Dataset parse_dataset(std::string_view csv);
// The shipped pizza recipe table.
const Dataset& pizza_dataset();

struct TreeNode {
  int feature = -1;  // -1 for leaves
  int if_absent = -1;
  int if_present = -1;
  std::vector<double> proba;  // leaves only
  std::size_t label = 0;      // leaves only; lowest index among the most frequent

  bool operator==(const TreeNode&) const = default;
};

class DecisionTree {
 public:
  DecisionTree(std::vector<std::string> features, std::vector<std::string> classes, std::vector<TreeNode> nodes);

  std::vector<double> predict_proba(const IngredientVector& x) const;
  std::size_t predict(const IngredientVector& x) const;

  const std::vector<std::string>& features() const { return features_; }
  const std::vector<std::string>& classes() const { return classes_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t class_index(std::string_view name) const;
  std::size_t depth() const;

  bool operator==(const DecisionTree&) const = default;

 private:
  const TreeNode& leaf_for(const IngredientVector& x) const;

  std::vector<std::string> features_;
  std::vector<std::string> classes_;
  std::vector<TreeNode> nodes_;  // nodes_[0] is the root
};

// Greedy top-down induction with Gini impurity. The split with the largest
// impurity decrease wins, ties to the lowest feature index. A node becomes a
// leaf when pure or when no split decreases impurity.
DecisionTree train_tree(const Dataset& data);

double gini(const std::vector<std::size_t>& class_counts);

}  // namespace hexar
