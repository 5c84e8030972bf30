#pragma once

// Timing harness for query and maintenance sweeps.

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "scale/datagen.hpp"
#include "scale/ordered_index.hpp"
#include "scale/ore.hpp"

namespace scale::bench {

struct QueryConfig {
  std::size_t n = 2500;
  std::size_t d = 3;
  ore::OreParams params{};
  datagen::Distribution dist = datagen::Distribution::inde;
  std::uint64_t seed = 1;
  std::size_t runs = 10;
  IndexVariant variant = IndexVariant::avl;
};

// Means over the runs, in milliseconds. The cpu_ fields count CPU time of
// the calling thread, which is immune to preemption and steal time on
// shared hosts.
struct QueryTiming {
  double encrypt_ms = 0;
  double server_ms = 0;
  double total_ms() const { return encrypt_ms + server_ms; }
  double encrypt_cpu_ms = 0;
  double server_cpu_ms = 0;
  double total_cpu_ms() const { return encrypt_cpu_ms + server_cpu_ms; }
  double secure_compares = 0;
  double result_size = 0;
  double ciphertexts = 0;
  // One-off dataset encryption and ingest.
  double setup_ms = 0;
};

// Encrypts a generated dataset, then times `runs` queries at fresh random
// points: client query encryption and server evaluation separately.
QueryTiming time_queries(const QueryConfig& cfg);

// Builds one database per config, then runs `rounds` rounds in which every
// config answers the same random query, visiting the configs in rotated
// order. Slow drift of the host then hits all configs alike, so per-round
// ratios between configs are far steadier than separate means. Returns
// encrypt plus server milliseconds, indexed [config][round]. A config with
// fewer dimensions uses a prefix of the shared query point.
std::vector<std::vector<double>> time_queries_interleaved(
    const std::vector<QueryConfig>& cfgs, std::size_t rounds);

struct MaintenanceConfig {
  std::size_t n = 2500;
  std::size_t d = 3;
  ore::OreParams params{};
  datagen::Distribution dist = datagen::Distribution::inde;
  std::uint64_t seed = 1;
  // Inserts, then deletes, per run.
  std::size_t ops = 10;
  std::size_t runs = 10;
};

struct MaintenanceTiming {
  // Mean cloud-side time per operation in milliseconds.
  double insert_ms = 0;
  double delete_ms = 0;
  // Mean ORE compares per insert.
  double insert_compares = 0;
};

// Ingests one encrypted dataset per variant and times only the cloud-side
// apply of insert and delete requests. Bundles are prepared up front and
// shared by all variants so every index sees identical work.
std::vector<MaintenanceTiming> time_maintenance(
    const MaintenanceConfig& cfg, const std::vector<IndexVariant>& variants);

// CPU time consumed so far by the calling thread, in milliseconds.
double thread_cpu_ms();

enum class Sweep { n, d, block, key, index };

Sweep parse_sweep(const std::string& name);
const char* sweep_name(Sweep s);

struct SweepOptions {
  Sweep sweep = Sweep::n;
  QueryConfig base{};
  // Values of the swept parameter. Empty selects the defaults: n in
  // 500..2500, d in 2..6, block in {2,4,8,16}, key in {128,192,256},
  // index at the base n.
  std::vector<std::size_t> values;
  std::size_t maintenance_ops = 10;
};

// Writes "# key=value" configuration lines, a header and one row per point.
// progress, when set, receives a line per finished point.
void run_sweep(const SweepOptions& opts, std::ostream& csv,
               const std::function<void(const std::string&)>& progress = {});

}  // namespace scale::bench
