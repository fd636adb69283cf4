#pragma once

// Ground-truth slate utilities on [0, 1]: mean rescaled rating for
// set-selection tasks, nDCG against a reference order for ordering tasks.

#include <map>
#include <span>
#include <string>
#include <utility>

#include "slatejudge/core.h"

namespace slatejudge {

struct RatingScale {
  double rating_min = 1.0;
  double rating_max = 5.0;

  // Throws InvalidArgument unless rating_max > rating_min.
  static RatingScale make(double rating_min, double rating_max);
  bool contains(double rating) const {
    return rating >= rating_min && rating <= rating_max;
  }
  double rescale(double rating) const {
    return (rating - rating_min) / (rating_max - rating_min);
  }
};

// Most-preferred item first; ids distinct.
using ReferenceOrder = std::span<const std::string>;

// Mean over the slate of (r - min) / (max - min). Independent of slate order.
// Throws MissingRating or RatingOutOfScale.
double rating_sum_utility(const Slate& slate,
                          const std::map<std::string, double>& ratings,
                          const RatingScale& scale);

// Linear-gain nDCG of the slate against the reference: the item at reference
// position p (1-based) has relevance R - p + 1, items outside the reference
// have relevance 0, rank r is discounted by log2(r + 1), and the result is
// normalized by the DCG of the first K reference items. Throws EmptyReference
// or InvalidArgument (empty slate).
double ndcg_utility(const Slate& slate, ReferenceOrder reference);

// Utility of the user-preferred slate of a pair.
inline double u_star(double u1, double u2) { return u1 > u2 ? u1 : u2; }

// Utility at the position the model chose. Throws InvalidArgument for
// anything other than kFirst or kSecond.
double f_star(std::pair<double, double> pair_utilities, Choice model_preferred);

}  // namespace slatejudge
