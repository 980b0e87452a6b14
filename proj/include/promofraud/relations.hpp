#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace promofraud {

// The eight transaction attribute dimensions along which two users'
// same-day same-product transactions can match.
enum class Relation : std::uint8_t {
  kOrderLocation = 0,  // geohash of the order's location
  kShareLink = 1,      // link used to share the product
  kDelivery = 2,       // driver / consignee details
  kRetailStore = 3,    // offline dealer id
  kGroupId = 4,        // in-app group chat id
  kPromotion = 5,      // promotion id
  kCoupon = 6,         // coupon type
  kStimulation = 7,    // sales strategy for offline dealers
};

inline constexpr int kRelationCount = 8;

inline constexpr std::array<Relation, kRelationCount> kAllRelations = {
    Relation::kOrderLocation, Relation::kShareLink,  Relation::kDelivery,
    Relation::kRetailStore,   Relation::kGroupId,    Relation::kPromotion,
    Relation::kCoupon,        Relation::kStimulation,
};

inline constexpr std::array<std::string_view, kRelationCount> kRelationNames = {
    "order_location", "share_link", "delivery",     "retail_store",
    "group_id",       "promotion",  "coupon",       "stimulation",
};

constexpr int relation_index(Relation r) { return static_cast<int>(r); }

constexpr std::string_view relation_name(Relation r) {
  return kRelationNames[relation_index(r)];
}

constexpr std::optional<Relation> relation_from_index(int idx) {
  if (idx < 0 || idx >= kRelationCount) return std::nullopt;
  return static_cast<Relation>(idx);
}

inline std::optional<Relation> relation_from_name(std::string_view name) {
  for (int i = 0; i < kRelationCount; ++i) {
    if (kRelationNames[i] == name) return static_cast<Relation>(i);
  }
  return std::nullopt;
}

}  // namespace promofraud
