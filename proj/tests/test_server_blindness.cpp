// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <type_traits>

#include "cipherdenoise/paillier_private.hpp"
#include "cipherdenoise/server.hpp"
#include "include_graph.hpp"

namespace cipherdenoise {
namespace {

const std::filesystem::path kRoot = CD_SOURCE_DIR;

TEST(ServerBlindness, ServerGraphExcludesPrivateKeyModules) {
  const auto mods = testing::reachable_modules(kRoot, {"server", "serve"});
  EXPECT_TRUE(mods.count("protocol"));
  EXPECT_TRUE(mods.count("ciphertensor"));
  EXPECT_TRUE(mods.count("transport"));
  for (const auto& p : testing::private_modules()) EXPECT_EQ(mods.count(p), 0U) << p;
}

TEST(ServerBlindness, WalkerFindsPrivateModulesFromClient) {
  const auto mods = testing::reachable_modules(kRoot, {"client"});
  for (const auto& p : testing::private_modules()) EXPECT_EQ(mods.count(p), 1U) << p;
  EXPECT_FALSE(testing::private_symbol_uses(kRoot, {"client"}).empty());
}

TEST(ServerBlindness, ServerSourcesNameNoPrivateSymbols) {
  const auto mods = testing::reachable_modules(kRoot, {"server", "serve"});
  for (const auto& hit : testing::private_symbol_uses(kRoot, mods)) ADD_FAILURE() << hit;
}

TEST(ServerBlindness, ServerCannotBeHandedAKeypair) {
  static_assert(!std::is_constructible_v<Server, ModelSpec, PaillierKeypair>);
  static_assert(!std::is_constructible_v<Server, PaillierKeypair>);
  static_assert(std::is_same_v<decltype(std::declval<const ServerSession&>().public_key()),
                               const std::optional<PaillierPublicKey>&>);
}

}  // namespace
}  // namespace cipherdenoise
