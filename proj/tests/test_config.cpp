/* Copyright 2026 The pgasrt Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include "pgas/config.hpp"
#include "pgas/error.hpp"

using namespace pgas;

TEST_CASE("defaults are valid") {
  Config c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.threshold_bytes == 4096);
  CHECK(c.region_bytes == 4u << 20);
  CHECK(c.mode == ProgressMode::Agent);
}

TEST_CASE("agents_per_node bounds") {
  Config c;
  c.agents_per_node = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.agents_per_node = c.units_per_node;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.agents_per_node = c.units_per_node - 1;
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("key=value parsing") {
  const Config c = parse_config_text(R"(
    # two nodes
    nodes = 2
    units_per_node = 5
    agents_per_node = 2
    threshold_bytes = 8K
    net_latency = 200us
    net_bandwidth = 125000000
    mode = eager
    time_dilation = 0.5
    region_bytes = 1MiB
    agent_park = 2ms
    transcript = off
  )");
  CHECK(c.nodes == 2);
  CHECK(c.units_per_node == 5);
  CHECK(c.agents_per_node == 2);
  CHECK(c.threshold_bytes == 8192);
  CHECK(c.net_latency == std::chrono::microseconds(200));
  CHECK(c.net_bandwidth == 125000000);
  CHECK(c.mode == ProgressMode::EagerDirect);
  CHECK(c.time_dilation == 0.5);
  CHECK(c.region_bytes == 1u << 20);
  CHECK(c.agent_park == std::chrono::milliseconds(2));
  CHECK_FALSE(c.transcript);
  CHECK(c.app_units_per_node() == 3);
  CHECK(c.total_units() == 10);
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(parse_config_text("nodes 2"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("colour = red"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("net_latency = 100"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("nodes = -1"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("agents_per_node = 0"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config"), ConfigError);
}

TEST_CASE("byte counts") {
  CHECK(parse_bytes("4096") == 4096);
  CHECK(parse_bytes("4K") == 4096);
  CHECK(parse_bytes("64KiB") == 65536);
  CHECK(parse_bytes("1M") == 1048576);
  CHECK_THROWS_AS(parse_bytes("K"), ConfigError);
  CHECK_THROWS_AS(parse_bytes("3Q"), ConfigError);
}

TEST_CASE("mode names") {
  for (auto m : {ProgressMode::Deferred, ProgressMode::EagerDirect, ProgressMode::Agent})
    CHECK(parse_mode(to_string(m)) == m);
  CHECK_THROWS_AS(parse_mode("turbo"), ConfigError);
}
