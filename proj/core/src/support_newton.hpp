#pragma once

#include <optional>
#include <vector>

#include "mtp2/matcore.hpp"
#include "mtp2/mmle.hpp"

namespace mtp2::detail {

struct SupportSolution {
  SymmetricMatrix theta;
  SymmetricMatrix sigma;
  std::vector<Edge> edges;
  /// max |Sigma - S| over the diagonal and the edges before Sigma is set to S there.
  double stationarity = 0.0;
};

/// Minimizes <Theta, S> - log det Theta over Theta supported on the diagonal
/// and `edges` with Theta_e <= 0, by damped Newton from `start`. An edge whose
/// entry reaches zero along a step leaves the support. Empty when the
/// iteration fails.
std::optional<SupportSolution> newton_on_support(const SymmetricMatrix& s, std::vector<Edge> edges,
                                                 const SymmetricMatrix& start);

/// Active-set loop around `newton_on_support` that admits the worst dual
/// violator each round. On success Sigma equals S exactly on the diagonal and
/// the support, with the stationarity gap bounded by `kkt_target`, and the
/// pair passes the KKT certificate at `kkt_target`.
std::optional<SupportSolution> polish_on_support(const SymmetricMatrix& s, std::vector<Edge> edges,
                                                 const SymmetricMatrix& start, double kkt_target,
                                                 std::size_t max_dim);

}  // namespace mtp2::detail
