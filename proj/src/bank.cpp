#include "irtcat/bank.hpp"

#include <fstream>

#include "irtcat/version.hpp"
#include "json.hpp"

namespace irtcat {

const char* kBankSchemaVersion = kSchemaVersion;

int ItemBank::add(BankItem item) {
  if (item.id.empty())
    throw ConfigError("ItemBank::add: empty item id");
  if (index_.count(item.id))
    throw ConfigError("ItemBank::add: duplicate item id '" + item.id + "'");
  check_item_parameters(item.params, "ItemBank::add('" + item.id + "')");
  if (!within_operational_bounds(item.params))
    item.filtered = true;
  const int idx = static_cast<int>(items_.size());
  index_.emplace(item.id, idx);
  items_.push_back(std::move(item));
  return idx;
}

const BankItem& ItemBank::item(const std::string& id) const {
  return items_[static_cast<std::size_t>(index_of(id))];
}

int ItemBank::find(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? -1 : it->second;
}

int ItemBank::index_of(const std::string& id) const {
  const int idx = find(id);
  if (idx < 0)
    throw LookupError("unknown item id '" + id + "'");
  return idx;
}

std::vector<int> ItemBank::operational() const {
  std::vector<int> out;
  out.reserve(items_.size());
  for (int i = 0; i < size(); ++i)
    if (!items_[static_cast<std::size_t>(i)].filtered) out.push_back(i);
  return out;
}

void ItemBank::set_scale(double mean, double sd) {
  if (!std::isfinite(mean) || !std::isfinite(sd) || sd <= 0.0)
    throw ConfigError("ItemBank::set_scale: sd must be finite and positive");
  scale_mean_ = mean;
  scale_sd_ = sd;
}

std::string bank_to_json(const ItemBank& bank) {
  nlohmann::ordered_json j;
  j["schema_version"] = kBankSchemaVersion;
  j["scale"] = {{"mean", bank.scale_mean()}, {"sd", bank.scale_sd()}};
  auto items = nlohmann::ordered_json::array();
  for (const BankItem& it : bank.items()) {
    nlohmann::ordered_json o;
    o["item_id"] = it.id;
    o["a"] = it.params.a;
    o["b"] = it.params.b;
    o["c"] = it.params.c;
    o["partition"] = it.partition;
    o["filtered"] = it.filtered;
    o["notes"] = it.notes;
    items.push_back(std::move(o));
  }
  j["items"] = std::move(items);
  return j.dump(2) + "\n";
}

namespace {

double require_number(const nlohmann::ordered_json& o, const char* key, const std::string& where) {
  if (!o.contains(key) || !o[key].is_number())
    throw ParseError("bank: " + where + ": field '" + key + "' missing or not a number");
  return o[key].get<double>();
}

}  // namespace

ItemBank bank_from_json(const std::string& text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("bank: invalid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("schema_version") || !j["schema_version"].is_string())
    throw ParseError("bank: missing schema_version");
  if (j["schema_version"].get<std::string>() != kBankSchemaVersion)
    throw ParseError("bank: unsupported schema_version '" +
                     j["schema_version"].get<std::string>() + "', expected '" +
                     kBankSchemaVersion + "'");
  if (!j.contains("items") || !j["items"].is_array())
    throw ParseError("bank: missing items array");

  ItemBank bank;
  if (j.contains("scale")) {
    const auto& s = j["scale"];
    bank.set_scale(require_number(s, "mean", "scale"), require_number(s, "sd", "scale"));
  }
  for (const auto& o : j["items"]) {
    if (!o.is_object() || !o.contains("item_id") || !o["item_id"].is_string())
      throw ParseError("bank: item entry without a string item_id");
    BankItem it;
    it.id = o["item_id"].get<std::string>();
    const std::string where = "item '" + it.id + "'";
    it.params.a = require_number(o, "a", where);
    it.params.b = require_number(o, "b", where);
    it.params.c = require_number(o, "c", where);
    if (o.contains("partition")) {
      if (!o["partition"].is_number_integer())
        throw ParseError("bank: " + where + ": partition must be an integer");
      it.partition = o["partition"].get<int>();
    }
    if (o.contains("filtered")) {
      if (!o["filtered"].is_boolean())
        throw ParseError("bank: " + where + ": filtered must be a boolean");
      it.filtered = o["filtered"].get<bool>();
    }
    if (o.contains("notes")) {
      if (!o["notes"].is_string())
        throw ParseError("bank: " + where + ": notes must be a string");
      it.notes = o["notes"].get<std::string>();
    }
    try {
      bank.add(std::move(it));
    } catch (const ConfigError& e) {
      throw ParseError(std::string("bank: ") + e.what());
    }
  }
  return bank;
}

void save_bank(const ItemBank& bank, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw ConfigError("save_bank: cannot open '" + path + "' for writing");
  out << bank_to_json(bank);
  if (!out)
    throw ConfigError("save_bank: write to '" + path + "' failed");
}

ItemBank load_bank(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ConfigError("load_bank: cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bank_from_json(text);
}

}  // namespace irtcat
