#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace pofmkl {

/// What a client uploads after one round: the kernels it chose and the
/// locally updated parameter vector of each. Kernel indices are 0-based and
/// kept in ascending order.
struct ClientUpdate {
  int client_id = 0;  // 0-based
  int round = 1;
  std::vector<int> kernels;
  std::vector<std::vector<double>> thetas;
  std::size_t params_sent = 0;
};

/// Canonical single-line text form used for golden traces:
/// `client_id;t;i1,i2,..;v1,v2,..` with 1-based ids/indices, the vectors
/// concatenated in index order, reals printed with %.17g.
std::string to_canonical(const ClientUpdate& update);

}  // namespace pofmkl
