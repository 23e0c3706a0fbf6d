#include "pofmkl/server.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <set>
#include <utility>

#include "pofmkl/error.hpp"
#include "pofmkl/kernels.hpp"
#include "pofmkl/summation.hpp"

namespace pofmkl {

std::string to_canonical(const ClientUpdate& update) {
  std::string out = std::to_string(update.client_id + 1) + ';' +
                    std::to_string(update.round) + ';';
  for (std::size_t i = 0; i < update.kernels.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(update.kernels[i] + 1);
  }
  out += ';';
  char buf[32];
  bool first = true;
  for (const auto& theta : update.thetas) {
    for (double v : theta) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      if (!first) out += ',';
      out += buf;
      first = false;
    }
  }
  return out;
}

GlobalModel GlobalModel::zeros(int n_kernels, int n_frequencies, int n_clients) {
  if (n_kernels < 1 || n_frequencies < 1 || n_clients < 1) {
    throw Error(ErrorKind::Config, "global model needs N, D, K >= 1");
  }
  GlobalModel m;
  m.thetas.assign(static_cast<std::size_t>(n_kernels),
                  std::vector<double>(2 * static_cast<std::size_t>(n_frequencies), 0.0));
  m.round = 1;
  m.num_clients = n_clients;
  return m;
}

ModelSnapshot broadcast(const GlobalModel& model) {
  return ModelSnapshot(std::make_shared<const GlobalModel>(model));
}

GlobalModel aggregate(const GlobalModel& model, std::span<const ClientUpdate> updates) {
  return aggregate(model, updates, std::nullopt, nullptr);
}

GlobalModel aggregate(const GlobalModel& model, std::span<const ClientUpdate> updates,
                      std::optional<double> norm_cap,
                      std::vector<NormDiagnostic>* diagnostics) {
  const std::size_t n_kernels = model.thetas.size();
  const std::size_t dim = model.theta_dim();

  // Per kernel, the contributing (client, vector) pairs in client order.
  std::vector<std::vector<std::pair<int, const std::vector<double>*>>> by_kernel(n_kernels);
  std::set<std::pair<int, int>> seen;
  for (const auto& u : updates) {
    if (u.round != model.round) {
      throw Error(ErrorKind::Protocol, "update from client " + std::to_string(u.client_id + 1) +
                                           " is for round " + std::to_string(u.round) +
                                           ", server is at round " +
                                           std::to_string(model.round));
    }
    if (u.client_id < 0 || u.client_id >= model.num_clients) {
      throw Error(ErrorKind::Protocol, "update from unknown client id");
    }
    if (u.kernels.size() != u.thetas.size()) {
      throw Error(ErrorKind::Shape, "update lists a different number of kernels and vectors");
    }
    for (std::size_t j = 0; j < u.kernels.size(); ++j) {
      const int kernel = u.kernels[j];
      if (kernel < 0 || static_cast<std::size_t>(kernel) >= n_kernels) {
        throw Error(ErrorKind::Protocol, "update references kernel out of range");
      }
      if (u.thetas[j].size() != dim) {
        throw Error(ErrorKind::Shape, "update vector for kernel " + std::to_string(kernel + 1) +
                                          " has length " + std::to_string(u.thetas[j].size()) +
                                          ", expected " + std::to_string(dim));
      }
      if (!seen.emplace(u.client_id, kernel).second) {
        throw Error(ErrorKind::Protocol, "duplicate update for client " +
                                             std::to_string(u.client_id + 1) + " kernel " +
                                             std::to_string(kernel + 1));
      }
      by_kernel[static_cast<std::size_t>(kernel)].emplace_back(u.client_id, &u.thetas[j]);
    }
  }

  GlobalModel next = model;
  next.round = model.round + 1;
  const double inv_k = 1.0 / static_cast<double>(model.num_clients);
  std::vector<double> deltas;
  for (std::size_t i = 0; i < n_kernels; ++i) {
    auto& contributors = by_kernel[i];
    if (!contributors.empty()) {
      std::sort(contributors.begin(), contributors.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      const auto& theta = model.thetas[i];
      auto& out = next.thetas[i];
      deltas.resize(contributors.size());
      for (std::size_t c = 0; c < dim; ++c) {
        for (std::size_t k = 0; k < contributors.size(); ++k) {
          deltas[k] = theta[c] - (*contributors[k].second)[c];
        }
        out[c] = theta[c] - inv_k * pairwise_sum(deltas);
      }
    }
    if (norm_cap && diagnostics) {
      const double norm = std::sqrt(dot(next.thetas[i], next.thetas[i]));
      if (norm > *norm_cap) {
        diagnostics->push_back(NormDiagnostic{model.round, static_cast<int>(i), norm});
      }
    }
  }
  return next;
}

namespace {

constexpr char kModelMagic[8] = {'P', 'M', 'K', 'L', 'G', 'M', '0', '1'};

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little);
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.write(bytes, sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  char bytes[sizeof(T)];
  if (!in.read(bytes, sizeof(T))) throw Error(ErrorKind::Parse, "model checkpoint truncated");
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_model_binary(const GlobalModel& model, std::ostream& out) {
  out.write(kModelMagic, sizeof kModelMagic);
  put_le<std::int32_t>(out, model.round);
  put_le<std::int32_t>(out, model.num_clients);
  put_le<std::int32_t>(out, model.num_kernels());
  put_le<std::int32_t>(out, static_cast<std::int32_t>(model.theta_dim()));
  for (const auto& theta : model.thetas) {
    for (double v : theta) put_le<double>(out, v);
  }
}

GlobalModel read_model_binary(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kModelMagic, sizeof magic) != 0) {
    throw Error(ErrorKind::Parse, "not a model checkpoint");
  }
  GlobalModel m;
  m.round = get_le<std::int32_t>(in);
  m.num_clients = get_le<std::int32_t>(in);
  const int n = get_le<std::int32_t>(in);
  const int dim = get_le<std::int32_t>(in);
  if (n < 1 || dim < 0 || m.round < 1 || m.num_clients < 1) {
    throw Error(ErrorKind::Parse, "model checkpoint has bad header");
  }
  m.thetas.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(dim)));
  for (auto& theta : m.thetas) {
    for (double& v : theta) v = get_le<double>(in);
  }
  return m;
}

void write_model_csv(const GlobalModel& model, std::ostream& out) {
  out << "kernel,j,value\n";
  char buf[32];
  for (std::size_t i = 0; i < model.thetas.size(); ++i) {
    for (std::size_t j = 0; j < model.thetas[i].size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", model.thetas[i][j]);
      out << (i + 1) << ',' << (j + 1) << ',' << buf << '\n';
    }
  }
}

}  // namespace pofmkl
