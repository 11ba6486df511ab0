#include "irtcat/response_matrix.hpp"

#include <fstream>
#include <sstream>

namespace irtcat {

namespace {

void build_index(const std::vector<std::string>& ids,
                 std::unordered_map<std::string, int>& index, const char* kind) {
  index.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i].empty())
      throw ParseError(std::string("response matrix: empty ") + kind + " id");
    if (!index.emplace(ids[i], static_cast<int>(i)).second)
      throw ParseError(std::string("response matrix: duplicate ") + kind + " id '" + ids[i] + "'");
  }
}

}  // namespace

ResponseMatrix::ResponseMatrix(std::vector<std::string> model_ids,
                               std::vector<std::string> item_ids)
    : model_ids_(std::move(model_ids)), item_ids_(std::move(item_ids)) {
  build_index(model_ids_, model_index_, "model");
  build_index(item_ids_, item_index_, "item");
  cells_.assign(model_ids_.size() * item_ids_.size(), kMissing);
}

int ResponseMatrix::model_index(const std::string& id) const {
  auto it = model_index_.find(id);
  return it == model_index_.end() ? -1 : it->second;
}

int ResponseMatrix::item_index(const std::string& id) const {
  auto it = item_index_.find(id);
  return it == item_index_.end() ? -1 : it->second;
}

bool ResponseMatrix::row_complete(int model) const {
  for (int j = 0; j < n_items(); ++j)
    if (at(model, j) == kMissing) return false;
  return true;
}

int ResponseMatrix::row_total(int model) const {
  int t = 0;
  for (int j = 0; j < n_items(); ++j)
    if (at(model, j) == 1) ++t;
  return t;
}

ResponseMatrix ResponseMatrix::select(const std::vector<int>& model_rows,
                                      const std::vector<int>& item_cols) const {
  std::vector<std::string> mids, iids;
  mids.reserve(model_rows.size());
  iids.reserve(item_cols.size());
  for (int r : model_rows) mids.push_back(model_ids_.at(static_cast<std::size_t>(r)));
  for (int c : item_cols) iids.push_back(item_ids_.at(static_cast<std::size_t>(c)));
  ResponseMatrix out(std::move(mids), std::move(iids));
  for (std::size_t r = 0; r < model_rows.size(); ++r)
    for (std::size_t c = 0; c < item_cols.size(); ++c)
      out.set(static_cast<int>(r), static_cast<int>(c), at(model_rows[r], item_cols[c]));
  return out;
}

namespace {

// splits one CSV line; no quoting in this format, ids must not contain commas
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

}  // namespace

ResponseMatrix matrix_from_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw ParseError(origin + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> header = split_csv_line(line);
  if (header.empty() || header[0] != "model_id")
    throw ParseError(origin + ": header must start with 'model_id'");
  if (header.size() < 2)
    throw ParseError(origin + ": no item columns");

  std::vector<std::string> item_ids(header.begin() + 1, header.end());

  std::vector<std::string> model_ids;
  std::vector<std::int8_t> rows;
  const std::size_t n_items = item_ids.size();
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != n_items + 1)
      throw ParseError(origin + ": line " + std::to_string(lineno) + ": expected " +
                       std::to_string(n_items + 1) + " fields, got " +
                       std::to_string(cells.size()));
    model_ids.push_back(cells[0]);
    for (std::size_t j = 1; j < cells.size(); ++j) {
      const std::string& v = cells[j];
      std::int8_t code;
      if (v.empty())
        code = ResponseMatrix::kMissing;
      else if (v == "0")
        code = 0;
      else if (v == "1")
        code = 1;
      else
        throw ParseError(origin + ": line " + std::to_string(lineno) + ", column '" +
                         item_ids[j - 1] + "': bad cell '" + v + "' (want 0, 1 or empty)");
      rows.push_back(code);
    }
  }
  if (model_ids.empty())
    throw ParseError(origin + ": no model rows");

  ResponseMatrix m(std::move(model_ids), std::move(item_ids));
  for (int r = 0; r < m.n_models(); ++r)
    for (int c = 0; c < m.n_items(); ++c)
      m.set(r, c, rows[static_cast<std::size_t>(r) * n_items + static_cast<std::size_t>(c)]);
  return m;
}

ResponseMatrix load_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ConfigError("load_matrix: cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return matrix_from_csv(text, path);
}

std::string matrix_to_csv(const ResponseMatrix& m) {
  std::string out = "model_id";
  for (const auto& id : m.item_ids()) {
    out += ',';
    out += id;
  }
  out += '\n';
  for (int r = 0; r < m.n_models(); ++r) {
    out += m.model_ids()[static_cast<std::size_t>(r)];
    for (int c = 0; c < m.n_items(); ++c) {
      out += ',';
      const std::int8_t v = m.at(r, c);
      if (v == 0)
        out += '0';
      else if (v == 1)
        out += '1';
    }
    out += '\n';
  }
  return out;
}

void save_matrix(const ResponseMatrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw ConfigError("save_matrix: cannot open '" + path + "' for writing");
  out << matrix_to_csv(m);
  if (!out)
    throw ConfigError("save_matrix: write to '" + path + "' failed");
}

}  // namespace irtcat
