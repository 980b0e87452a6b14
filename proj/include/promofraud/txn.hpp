#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "promofraud/csv.hpp"
#include "promofraud/relations.hpp"

namespace promofraud {

// One purchase event. `day` is an integer day index; time-of-day is not part
// of the anonymized schema. A relation value that was empty for this
// transaction is absent from `relation_values`.
struct Transaction {
  std::string txn_id;
  std::string user_id;
  std::string product_id;
  std::int64_t day = 0;
  std::int64_t quantity = 0;
  double price = 0.0;
  std::optional<double> gross_margin;
  std::array<std::optional<std::string>, kRelationCount> relation_values;

  const std::optional<std::string>& relation(Relation r) const {
    return relation_values[relation_index(r)];
  }
  void set_relation(Relation r, std::string value) {
    relation_values[relation_index(r)] = std::move(value);
  }
};

// user_id -> {fraud=1, normal=0}; users absent from the map are unknown (-1).
class LabelSet {
 public:
  static constexpr int kFraud = 1;
  static constexpr int kNormal = 0;
  static constexpr int kUnknown = -1;

  int label_of(const std::string& user) const {
    const auto it = labels_.find(user);
    return it == labels_.end() ? kUnknown : it->second;
  }

  void set(const std::string& user, int label) {
    if (label < -1 || label > 1) throw std::invalid_argument("label outside {-1,0,1}");
    labels_[user] = label;
  }

  bool contains(const std::string& user) const { return labels_.count(user) > 0; }
  std::size_t size() const { return labels_.size(); }
  const std::unordered_map<std::string, int>& entries() const { return labels_; }

 private:
  std::unordered_map<std::string, int> labels_;
};

inline constexpr std::string_view kTransactionHeader =
    "txn_id,user_id,product_id,day,quantity,price,gross_margin,"
    "r1,r2,r3,r4,r5,r6,r7,r8";

inline constexpr std::string_view kLabelHeader = "user_id,label";

namespace detail {
inline std::runtime_error line_error(const std::string& what, std::size_t line_no) {
  return std::runtime_error(what + " at line " + std::to_string(line_no));
}
}  // namespace detail

// Loads a transaction CSV. Malformed rows are rejected (the whole load
// fails), never silently skipped.
inline std::vector<Transaction> load_transactions(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw std::runtime_error("empty transaction file: " + path);
  if (lines[0] != kTransactionHeader) {
    throw std::runtime_error("transaction header mismatch in " + path);
  }
  std::vector<Transaction> txns;
  txns.reserve(lines.size() - 1);
  std::unordered_set<std::string> seen_ids;
  seen_ids.reserve(lines.size());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const auto cols = split_csv(lines[i]);
    if (cols.size() != 7 + kRelationCount) {
      throw detail::line_error("wrong column count", line_no);
    }
    Transaction t;
    t.txn_id = cols[0];
    t.user_id = cols[1];
    t.product_id = cols[2];
    if (t.txn_id.empty()) throw detail::line_error("empty txn_id", line_no);
    if (t.user_id.empty()) throw detail::line_error("empty user_id", line_no);
    if (t.product_id.empty()) throw detail::line_error("empty product_id", line_no);
    if (!seen_ids.insert(t.txn_id).second) {
      throw detail::line_error("duplicate txn_id '" + t.txn_id + "'", line_no);
    }
    const auto day = parse_int(cols[3]);
    if (!day) throw detail::line_error("invalid day", line_no);
    t.day = *day;
    const auto quantity = parse_int(cols[4]);
    if (!quantity || *quantity < 1) throw detail::line_error("invalid quantity", line_no);
    t.quantity = *quantity;
    const auto price = parse_double(cols[5]);
    if (!price || *price < 0.0) throw detail::line_error("invalid price", line_no);
    t.price = *price;
    if (!cols[6].empty()) {
      const auto gm = parse_double(cols[6]);
      if (!gm) throw detail::line_error("invalid gross_margin", line_no);
      t.gross_margin = *gm;
    }
    for (int r = 0; r < kRelationCount; ++r) {
      if (!cols[7 + r].empty()) t.relation_values[r] = cols[7 + r];
    }
    txns.push_back(std::move(t));
  }
  return txns;
}

inline std::string serialize_transactions(const std::vector<Transaction>& txns) {
  std::string out;
  out.reserve(txns.size() * 96 + 128);
  out.append(kTransactionHeader);
  out.push_back('\n');
  for (const Transaction& t : txns) {
    out += t.txn_id;
    out.push_back(',');
    out += t.user_id;
    out.push_back(',');
    out += t.product_id;
    out.push_back(',');
    out += std::to_string(t.day);
    out.push_back(',');
    out += std::to_string(t.quantity);
    out.push_back(',');
    out += format_double(t.price);
    out.push_back(',');
    if (t.gross_margin) out += format_double(*t.gross_margin);
    for (int r = 0; r < kRelationCount; ++r) {
      out.push_back(',');
      if (t.relation_values[r]) out += *t.relation_values[r];
    }
    out.push_back('\n');
  }
  return out;
}

inline void write_transactions(const std::string& path,
                               const std::vector<Transaction>& txns) {
  write_text_file(path, serialize_transactions(txns));
}

// Keeps exactly the transactions with end_day - T < day <= end_day.
inline std::vector<Transaction> window(const std::vector<Transaction>& txns,
                                       std::int64_t end_day, std::int64_t days) {
  if (days <= 0) throw std::invalid_argument("window length must be >= 1");
  std::vector<Transaction> out;
  out.reserve(txns.size());
  for (const Transaction& t : txns) {
    if (t.day > end_day - days && t.day <= end_day) out.push_back(t);
  }
  return out;
}

inline std::int64_t max_day(const std::vector<Transaction>& txns) {
  std::int64_t m = 0;
  bool first = true;
  for (const Transaction& t : txns) {
    if (first || t.day > m) m = t.day;
    first = false;
  }
  return m;
}

inline LabelSet load_labels(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw std::runtime_error("empty label file: " + path);
  if (lines[0] != kLabelHeader) {
    throw std::runtime_error("label header mismatch in " + path);
  }
  LabelSet labels;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const auto cols = split_csv(lines[i]);
    if (cols.size() != 2) throw detail::line_error("wrong column count", line_no);
    if (cols[0].empty()) throw detail::line_error("empty user_id", line_no);
    const auto label = parse_int(cols[1]);
    if (!label || *label < -1 || *label > 1) {
      throw detail::line_error("label outside {-1,0,1}", line_no);
    }
    if (labels.contains(cols[0])) {
      throw detail::line_error("duplicate user_id '" + cols[0] + "'", line_no);
    }
    labels.set(cols[0], static_cast<int>(*label));
  }
  return labels;
}

inline void write_labels(const std::string& path, const LabelSet& labels) {
  std::vector<std::pair<std::string, int>> rows(labels.entries().begin(),
                                                labels.entries().end());
  std::sort(rows.begin(), rows.end());
  std::string out(kLabelHeader);
  out.push_back('\n');
  for (const auto& [user, label] : rows) {
    out += user;
    out.push_back(',');
    out += std::to_string(label);
    out.push_back('\n');
  }
  write_text_file(path, out);
}

}  // namespace promofraud
