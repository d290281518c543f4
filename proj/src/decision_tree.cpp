#include "hexar/decision_tree.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "hexar/prompt.hpp"
#include "hexar/resources.hpp"

namespace hexar {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

constexpr double kMinDecrease = 1e-12;

struct Builder {
  const Dataset& data;
  std::vector<TreeNode> nodes;

  std::vector<std::size_t> counts(const std::vector<std::size_t>& idx) const {
    std::vector<std::size_t> c(data.classes.size(), 0);
    for (auto i : idx) ++c[data.labels[i]];
    return c;
  }

  int grow(const std::vector<std::size_t>& idx, std::vector<bool>& used) {
    const auto node_counts = counts(idx);
    const double parent = gini(node_counts);
    const double n = static_cast<double>(idx.size());

    int best = -1;
    double best_decrease = kMinDecrease;
    if (parent > 0.0) {
      for (std::size_t f = 0; f < data.features.size(); ++f) {
        if (used[f]) continue;
        std::vector<std::size_t> absent(data.classes.size(), 0), present(data.classes.size(), 0);
        std::size_t n_present = 0;
        for (auto i : idx) {
          if (data.rows[i][f]) {
            ++present[data.labels[i]];
            ++n_present;
          } else {
            ++absent[data.labels[i]];
          }
        }
        if (n_present == 0 || n_present == idx.size()) continue;
        const double w1 = static_cast<double>(n_present) / n;
        const double decrease = parent - (1.0 - w1) * gini(absent) - w1 * gini(present);
        if (decrease > best_decrease) {
          best_decrease = decrease;
          best = static_cast<int>(f);
        }
      }
    }

    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    if (best < 0) {
      TreeNode& leaf = nodes[id];
      leaf.proba.resize(node_counts.size());
      for (std::size_t c = 0; c < node_counts.size(); ++c) leaf.proba[c] = static_cast<double>(node_counts[c]) / n;
      leaf.label = static_cast<std::size_t>(
          std::max_element(node_counts.begin(), node_counts.end()) - node_counts.begin());
      return id;
    }
    std::vector<std::size_t> absent_idx, present_idx;
    for (auto i : idx) (data.rows[i][best] ? present_idx : absent_idx).push_back(i);
    used[best] = true;
    const int left = grow(absent_idx, used);
    const int right = grow(present_idx, used);
    used[best] = false;
    nodes[id].feature = best;
    nodes[id].if_absent = left;
    nodes[id].if_present = right;
    return id;
  }
};

}  // namespace

Dataset parse_dataset(std::string_view csv) {
  Dataset data;
  std::istringstream in{std::string(csv)};
  std::string line;
  std::size_t line_no = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (header) {
      if (cells.size() < 2 || cells.back() != "label") throw DatasetError("dataset header must end with 'label'");
      data.features.assign(cells.begin(), cells.end() - 1);
      header = false;
      continue;
    }
    if (cells.size() != data.features.size() + 1) {
      throw DatasetError(
          fmt::format("line {}: expected {} cells, got {}", line_no, data.features.size() + 1, cells.size()));
    }
    IngredientVector row;
    for (std::size_t f = 0; f < data.features.size(); ++f) {
      if (cells[f] != "0" && cells[f] != "1") {
        throw DatasetError(fmt::format("line {}: non-binary value '{}'", line_no, cells[f]));
      }
      row.push_back(cells[f] == "1" ? 1 : 0);
    }
    const std::string& label = cells.back();
    auto it = std::find(data.classes.begin(), data.classes.end(), label);
    if (it == data.classes.end()) {
      data.classes.push_back(label);
      it = data.classes.end() - 1;
    }
    data.rows.push_back(std::move(row));
    data.labels.push_back(static_cast<std::size_t>(it - data.classes.begin()));
  }
  if (header) throw DatasetError("dataset is empty");
  if (data.rows.empty()) throw DatasetError("dataset has no rows");
  return data;
}

const Dataset& pizza_dataset() {
  static const Dataset data = parse_dataset(resource("pizza_recipes.csv"));
  return data;
}

double gini(const std::vector<std::size_t>& class_counts) {
  const double n = static_cast<double>(std::accumulate(class_counts.begin(), class_counts.end(), std::size_t{0}));
  if (n == 0.0) return 0.0;
  double sum = 0.0;
  for (auto c : class_counts) {
    const double p = static_cast<double>(c) / n;
    sum += p * p;
  }
  return 1.0 - sum;
}

DecisionTree::DecisionTree(std::vector<std::string> features, std::vector<std::string> classes,
                           std::vector<TreeNode> nodes)
    : features_(std::move(features)), classes_(std::move(classes)), nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw std::invalid_argument("decision tree needs at least one node");
}

const TreeNode& DecisionTree::leaf_for(const IngredientVector& x) const {
  if (x.size() != features_.size()) {
    throw std::invalid_argument(fmt::format("expected {} features, got {}", features_.size(), x.size()));
  }
  const TreeNode* node = &nodes_[0];
  while (node->feature >= 0) node = &nodes_[x[node->feature] ? node->if_present : node->if_absent];
  return *node;
}

std::vector<double> DecisionTree::predict_proba(const IngredientVector& x) const { return leaf_for(x).proba; }

std::size_t DecisionTree::predict(const IngredientVector& x) const { return leaf_for(x).label; }

std::size_t DecisionTree::class_index(std::string_view name) const {
  auto it = std::find(classes_.begin(), classes_.end(), name);
  if (it == classes_.end()) throw std::invalid_argument(fmt::format("unknown class '{}'", name));
  return static_cast<std::size_t>(it - classes_.begin());
}

std::size_t DecisionTree::depth() const {
  std::size_t deepest = 0;
  std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [id, d] = stack.back();
    stack.pop_back();
    const auto& node = nodes_[id];
    if (node.feature < 0) {
      deepest = std::max(deepest, d);
    } else {
      stack.emplace_back(node.if_absent, d + 1);
      stack.emplace_back(node.if_present, d + 1);
    }
  }
  return deepest;
}

DecisionTree train_tree(const Dataset& data) {
  if (data.rows.empty()) throw DatasetError("cannot train on an empty dataset");
  if (data.classes.empty()) throw DatasetError("dataset has no classes");
  if (data.labels.size() != data.rows.size()) throw DatasetError("label count differs from row count");
  std::vector<std::size_t> seen(data.classes.size(), 0);
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    if (data.rows[i].size() != data.features.size()) throw DatasetError(fmt::format("row {} has the wrong width", i));
    if (data.labels[i] >= data.classes.size()) throw DatasetError(fmt::format("row {} has an unknown label", i));
    ++seen[data.labels[i]];
  }
  for (std::size_t c = 0; c < seen.size(); ++c) {
    if (seen[c] == 0) throw DatasetError(fmt::format("class '{}' has no examples", data.classes[c]));
  }
  Builder builder{data, {}};
  std::vector<std::size_t> all(data.rows.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<bool> used(data.features.size(), false);
  builder.grow(all, used);
  return DecisionTree(data.features, data.classes, std::move(builder.nodes));
}

}  // namespace hexar
