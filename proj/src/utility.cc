#include "slatejudge/utility.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "slatejudge/errors.h"

namespace slatejudge {

RatingScale RatingScale::make(double rating_min, double rating_max) {
  if (!std::isfinite(rating_min) || !std::isfinite(rating_max) ||
      !(rating_max > rating_min)) {
    throw InvalidArgument("rating scale needs rating_max > rating_min");
  }
  return RatingScale{rating_min, rating_max};
}

double rating_sum_utility(const Slate& slate,
                          const std::map<std::string, double>& ratings,
                          const RatingScale& scale) {
  if (slate.item_ids.empty()) throw InvalidArgument("empty slate");
  double sum = 0.0;
  for (const auto& id : slate.item_ids) {
    auto it = ratings.find(id);
    if (it == ratings.end()) {
      throw MissingRating("no rating for item '" + id + "' in slate '" +
                          slate.slate_id + "'");
    }
    if (!scale.contains(it->second)) {
      throw RatingOutOfScale("rating " + std::to_string(it->second) +
                             " of item '" + id + "' is outside the scale");
    }
    sum += scale.rescale(it->second);
  }
  return std::clamp(sum / static_cast<double>(slate.k()), 0.0, 1.0);
}

double ndcg_utility(const Slate& slate, ReferenceOrder reference) {
  if (slate.item_ids.empty()) throw InvalidArgument("empty slate");
  if (reference.empty()) {
    throw EmptyReference("nDCG of slate '" + slate.slate_id +
                         "' needs a non-empty reference order");
  }
  const double r = static_cast<double>(reference.size());
  std::unordered_map<std::string_view, double> relevance;
  for (std::size_t p = 0; p < reference.size(); ++p) {
    relevance.emplace(reference[p], r - static_cast<double>(p));
  }

  double dcg = 0.0;
  for (std::size_t rank = 0; rank < slate.k(); ++rank) {
    auto it = relevance.find(slate.item_ids[rank]);
    if (it != relevance.end()) dcg += it->second / std::log2(rank + 2.0);
  }
  double ideal = 0.0;
  const std::size_t depth = std::min(slate.k(), reference.size());
  for (std::size_t rank = 0; rank < depth; ++rank) {
    ideal += (r - static_cast<double>(rank)) / std::log2(rank + 2.0);
  }
  return std::clamp(dcg / ideal, 0.0, 1.0);
}

double f_star(std::pair<double, double> pair_utilities, Choice model_preferred) {
  switch (model_preferred) {
    case Choice::kFirst: return pair_utilities.first;
    case Choice::kSecond: return pair_utilities.second;
    default:
      throw InvalidArgument("f_star needs a FIRST or SECOND choice");
  }
}

}  // namespace slatejudge
