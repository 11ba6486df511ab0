#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "irtcat/response_matrix.hpp"

namespace irtcat {

struct FilterConfig {
  double percentile_floor = 0.001;
  double sd_floor = 0.01;
  double acc_ceiling = 0.95;
  double rpb_floor = 0.1;
};

struct FilterReport {
  int input_models = 0;
  int input_items = 0;
  int retained_models = 0;
  int retained_items = 0;
  int models_removed_incomplete = 0;
  int models_removed_extreme = 0;
  int items_removed_low_variance = 0;
  int items_removed_ceiling = 0;
  int items_removed_discrimination = 0;
  // r_pb of every item that reached the discrimination stage and had a
  // defined correlation; items removed as undefined have no entry
  std::map<std::string, double> per_item_rpb;
  std::vector<std::string> removed_model_ids;
  std::vector<std::string> removed_item_ids;

  void absorb(const FilterReport& stage);
};

std::string report_to_json(const FilterReport& r);

// Drops models with any missing cell, then the floor(percentile_floor * n)
// lowest-scoring remaining models, ordered by (total score, model id).
std::pair<ResponseMatrix, FilterReport> filter_models(const ResponseMatrix& m,
                                                      double percentile_floor = 0.001);

// Drops items with population SD below sd_floor, or else accuracy above
// acc_ceiling; the SD rule is checked first so each removal is attributed
// to exactly one counter.
std::pair<ResponseMatrix, FilterReport> filter_items_variance(const ResponseMatrix& m,
                                                              double sd_floor = 0.01,
                                                              double acc_ceiling = 0.95);

// r_pb = ((mean total | y=1) - (mean total | y=0)) / sd(totals) * sqrt(p q)
// with population SD.  Constant column or constant totals are undefined.
double point_biserial(const std::vector<int>& item_column, const std::vector<double>& totals);

// Drops items whose point-biserial against the current total score is below
// rpb_floor or undefined.  Totals include the item under test.
std::pair<ResponseMatrix, FilterReport> filter_items_discrimination(const ResponseMatrix& m,
                                                                    double rpb_floor = 0.1);

// filter_models -> filter_items_variance -> filter_items_discrimination,
// in that order, with a merged report.
std::pair<ResponseMatrix, FilterReport> preprocess(const ResponseMatrix& m,
                                                   const FilterConfig& config = {});

}  // namespace irtcat
