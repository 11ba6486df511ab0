#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "irtcat/types.hpp"

namespace irtcat {

// Bounds an item must satisfy to be eligible for adaptive selection.
// Items outside them stay in the bank (they remain scoreable) but carry
// filtered = true and are never offered to a session.
constexpr double kOperationalMaxAbsB = 4.0;
constexpr double kOperationalMaxC = 0.5;

inline bool within_operational_bounds(const ItemParameters& p) {
  return p.a > 0.0 && std::abs(p.b) <= kOperationalMaxAbsB && p.c <= kOperationalMaxC;
}

struct BankItem {
  std::string id;
  ItemParameters params;
  int partition = 0;
  bool filtered = false;
  std::string notes;
};

class ItemBank {
 public:
  ItemBank() = default;

  // Rejects duplicate ids and invalid parameters; items outside the
  // operational bounds are force-flagged so the selection invariant holds
  // no matter where the bank came from.
  int add(BankItem item);

  int size() const { return static_cast<int>(items_.size()); }
  bool empty() const { return items_.empty(); }

  const BankItem& item(int idx) const { return items_.at(static_cast<std::size_t>(idx)); }
  BankItem& item(int idx) { return items_.at(static_cast<std::size_t>(idx)); }
  const BankItem& item(const std::string& id) const;

  // -1 when absent
  int find(const std::string& id) const;
  // throws LookupError when absent
  int index_of(const std::string& id) const;
  bool contains(const std::string& id) const { return find(id) >= 0; }

  // indices of unfiltered items, in insertion order
  std::vector<int> operational() const;

  double scale_mean() const { return scale_mean_; }
  double scale_sd() const { return scale_sd_; }
  void set_scale(double mean, double sd);

  const std::vector<BankItem>& items() const { return items_; }

 private:
  std::vector<BankItem> items_;
  std::unordered_map<std::string, int> index_;
  double scale_mean_ = 0.0;
  double scale_sd_ = 1.0;
};

// JSON serialization.  Key order and field set are stable so equal banks
// serialize to identical bytes.
std::string bank_to_json(const ItemBank& bank);
ItemBank bank_from_json(const std::string& text);
void save_bank(const ItemBank& bank, const std::string& path);
ItemBank load_bank(const std::string& path);

extern const char* kBankSchemaVersion;

}  // namespace irtcat
