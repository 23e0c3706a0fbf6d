#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <string>

#include "pofmkl/config.hpp"
#include "pofmkl/error.hpp"

using namespace pofmkl;

namespace {

const char* kBasic = R"(format_version = 1
# comment
[experiment]
algorithm = pof_mkl
K = 4   ; trailing comment
T = 30

[kernels]
N = 9
D = 10

[client]
M = 3
xi_k = 0.5
)";

ErrorKind kind_of(const std::function<void()>& fn, std::string* field = nullptr) {
  try {
    fn();
  } catch (const Error& e) {
    if (field) *field = e.field();
    return e.kind();
  }
  ADD_FAILURE() << "no error";
  return ErrorKind::Data;
}

}  // namespace

TEST(Config, ParsesSectionsAndComments) {
  const auto f = parse_config_text(kBasic);
  EXPECT_EQ(f.values.at("format_version"), "1");
  EXPECT_EQ(f.values.at("experiment.K"), "4");
  EXPECT_EQ(f.values.at("client.xi_k"), "0.5");
  const auto c = to_experiment_config(f);
  EXPECT_EQ(c.K, 4);
  EXPECT_EQ(c.T, 30);
  EXPECT_EQ(c.N, 9);
  EXPECT_EQ(c.M, 3);
  EXPECT_DOUBLE_EQ(c.xi_k_for(2), 0.5);
  EXPECT_FALSE(c.eta.has_value());
  EXPECT_DOUBLE_EQ(c.eta_value(), 1.0 / std::sqrt(30.0));
}

TEST(Config, DuplicateKeyNamesLine) {
  std::string field;
  const auto k = kind_of([] { (void)parse_config_text("[a]\nx = 1\nx = 2\n", "f.ini"); }, &field);
  EXPECT_EQ(k, ErrorKind::Config);
  EXPECT_EQ(field, "a.x");
  try {
    (void)parse_config_text("[a]\nx = 1\nx = 2\n", "f.ini");
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("f.ini:3"), std::string::npos);
  }
}

TEST(Config, MalformedLines) {
  EXPECT_EQ(kind_of([] { (void)parse_config_text("[a\n"); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([] { (void)parse_config_text("[]\n"); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([] { (void)parse_config_text("[a]\njust words\n"); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([] { (void)parse_config_text("= 3\n"); }), ErrorKind::Config);
}

TEST(Config, UnknownKeyRejected) {
  std::string field;
  auto f = parse_config_text(kBasic);
  f.values["client.mm"] = "3";
  EXPECT_EQ(kind_of([&] { (void)to_experiment_config(f); }, &field), ErrorKind::Config);
  EXPECT_EQ(field, "client.mm");
}

TEST(Config, BadValuesNameTheField) {
  std::string field;
  auto f = parse_config_text(kBasic);
  f.values["experiment.K"] = "four";
  EXPECT_EQ(kind_of([&] { (void)to_experiment_config(f); }, &field), ErrorKind::Config);
  EXPECT_EQ(field, "experiment.K");

  f = parse_config_text(kBasic);
  f.values["experiment.algorithm"] = "magic";
  EXPECT_EQ(kind_of([&] { (void)to_experiment_config(f); }, &field), ErrorKind::Config);
  EXPECT_EQ(field, "experiment.algorithm");

  f = parse_config_text(kBasic);
  f.values["format_version"] = "2";
  EXPECT_EQ(kind_of([&] { (void)to_experiment_config(f); }, &field), ErrorKind::Config);
  EXPECT_EQ(field, "format_version");

  f = parse_config_text(kBasic);
  f.values["client.M"] = "10";
  EXPECT_EQ(kind_of([&] { (void)to_experiment_config(f); }, &field), ErrorKind::Config);
  EXPECT_EQ(field, "client.M");
}

TEST(Config, OverridesReplaceAndAdd) {
  auto f = parse_config_text(kBasic);
  apply_override(f, "experiment.K = 6");
  apply_override(f, "server.eta=0.25");
  const auto c = to_experiment_config(f);
  EXPECT_EQ(c.K, 6);
  ASSERT_TRUE(c.eta.has_value());
  EXPECT_DOUBLE_EQ(*c.eta, 0.25);
  EXPECT_EQ(kind_of([&] { apply_override(f, "no_equals"); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([&] { apply_override(f, "=1"); }), ErrorKind::Config);
}

TEST(Config, UplinkCap) {
  auto f = parse_config_text(kBasic);
  apply_override(f, "budget.uplink_cap=60");
  EXPECT_EQ(to_experiment_config(f).uplink_cap, std::optional<std::size_t>(60));
  apply_override(f, "budget.uplink_cap=none");
  EXPECT_FALSE(to_experiment_config(f).uplink_cap.has_value());
  apply_override(f, "budget.uplink_cap=-3");
  EXPECT_EQ(kind_of([&] { (void)to_experiment_config(f); }), ErrorKind::Config);
  // 2 * 3 * 10 = 60 > 59
  apply_override(f, "budget.uplink_cap=59");
  EXPECT_EQ(kind_of([&] { (void)to_experiment_config(f); }), ErrorKind::Config);
}

TEST(Config, MissingFileIsIo) {
  std::string field;
  EXPECT_EQ(kind_of([] { (void)load_config_file("/nonexistent/x.ini"); }, &field), ErrorKind::Io);
  EXPECT_EQ(field, "/nonexistent/x.ini");
}

TEST(Config, CanonicalTextRoundTrips) {
  auto f = parse_config_text(kBasic);
  apply_override(f, "kernels.grid=explicit");
  apply_override(f, "kernels.sigmas=0.1, 0.5, 1, 2, 3, 4, 5, 6, 7");
  apply_override(f, "client.eta_k=0.1, 0.2, 0.3, 0.4");
  apply_override(f, "data.synth.generators=2, 5");
  const auto c = to_experiment_config(f);
  const auto text = canonical_text(c);
  const auto again = to_experiment_config(parse_config_text(text));
  EXPECT_EQ(canonical_text(again), text);
  EXPECT_EQ(config_hash(again), config_hash(c));
  EXPECT_EQ(again.eta_k.size(), 4u);
  EXPECT_EQ(again.grid.sigmas.size(), 9u);
}

TEST(Config, DefaultsRoundTrip) {
  const ExperimentConfig c;
  const auto text = canonical_text(c);
  EXPECT_EQ(canonical_text(to_experiment_config(parse_config_text(text))), text);
}

TEST(Config, HashSeparatesConfigs) {
  const auto a = to_experiment_config(parse_config_text(kBasic));
  auto f = parse_config_text(kBasic);
  apply_override(f, "experiment.seed=2");
  const auto b = to_experiment_config(f);
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a), config_hash(to_experiment_config(parse_config_text(kBasic))));
  EXPECT_EQ(hash_hex(0x1aULL), "000000000000001a");
}
