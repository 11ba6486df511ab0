#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "irtcat/types.hpp"

namespace irtcat {

// Dense binary response matrix, models in rows, items in columns.
// Cell values: 1 correct, 0 incorrect, kMissing for an empty cell.
class ResponseMatrix {
 public:
  static constexpr std::int8_t kMissing = -1;

  ResponseMatrix() = default;
  ResponseMatrix(std::vector<std::string> model_ids, std::vector<std::string> item_ids);

  int n_models() const { return static_cast<int>(model_ids_.size()); }
  int n_items() const { return static_cast<int>(item_ids_.size()); }

  std::int8_t at(int model, int item) const {
    return cells_[static_cast<std::size_t>(model) * item_ids_.size() +
                  static_cast<std::size_t>(item)];
  }
  void set(int model, int item, std::int8_t v) {
    cells_[static_cast<std::size_t>(model) * item_ids_.size() +
           static_cast<std::size_t>(item)] = v;
  }

  const std::vector<std::string>& model_ids() const { return model_ids_; }
  const std::vector<std::string>& item_ids() const { return item_ids_; }

  // -1 when absent
  int model_index(const std::string& id) const;
  int item_index(const std::string& id) const;

  bool row_complete(int model) const;

  // number of correct responses in a row, missing cells excluded
  int row_total(int model) const;

  // submatrix in the given row/column order
  ResponseMatrix select(const std::vector<int>& model_rows,
                        const std::vector<int>& item_cols) const;

  bool operator==(const ResponseMatrix& other) const {
    return model_ids_ == other.model_ids_ && item_ids_ == other.item_ids_ &&
           cells_ == other.cells_;
  }

 private:
  std::vector<std::string> model_ids_;
  std::vector<std::string> item_ids_;
  std::vector<std::int8_t> cells_;
  std::unordered_map<std::string, int> model_index_;
  std::unordered_map<std::string, int> item_index_;
};

// CSV with header "model_id,<item id>,..."; cells are 0, 1 or empty.
// Anything else is a ParseError naming the offending row and column.
ResponseMatrix load_matrix(const std::string& path);
ResponseMatrix matrix_from_csv(const std::string& text, const std::string& origin = "<string>");
void save_matrix(const ResponseMatrix& m, const std::string& path);
std::string matrix_to_csv(const ResponseMatrix& m);

}  // namespace irtcat
