#include "scale/bench.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <iomanip>
#include <random>
#include <sstream>

#include "scale/cloud_store.hpp"
#include "scale/codec.hpp"
#include "scale/error.hpp"
#include "scale/owner_client.hpp"
#include "scale/query_engine.hpp"

namespace scale::bench {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

MasterKey seeded_master_key(std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x5ca1e5ca1e5ca1e5ull);
  MasterKey mk;
  for (auto& b : mk) b = static_cast<std::uint8_t>(rng());
  return mk;
}

std::vector<std::uint32_t> random_point(std::mt19937_64& rng, std::size_t d) {
  std::uniform_int_distribution<std::uint32_t> u(0, datagen::kDomainMax);
  std::vector<std::uint32_t> q(d);
  for (auto& v : q) v = u(rng);
  return q;
}

std::vector<std::size_t> default_values(Sweep s, const QueryConfig& base) {
  switch (s) {
    case Sweep::n: return {500, 1000, 1500, 2000, 2500};
    case Sweep::d: return {2, 3, 4, 5, 6};
    case Sweep::block: return {2, 4, 8, 16};
    case Sweep::key: return {128, 192, 256};
    case Sweep::index: return {base.n};
  }
  return {};
}

}  // namespace

double thread_cpu_ms() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) * 1e3 +
         static_cast<double>(ts.tv_nsec) / 1e6;
}

QueryTiming time_queries(const QueryConfig& cfg) {
  if (cfg.runs == 0) fail(ErrorCode::parameter, "bench: runs must be positive");
  auto records = datagen::generate(cfg.dist, cfg.n, cfg.d, cfg.seed);
  QueryTiming out;
  auto t0 = Clock::now();
  auto [bundle, owner] =
      encrypt_dataset(records, seeded_master_key(cfg.seed), cfg.params);
  records.clear();
  auto db = CloudDatabase::ingest(std::move(bundle), cfg.variant);
  out.setup_ms = ms_since(t0);

  std::mt19937_64 rng(cfg.seed * 7919 + 17);
  for (std::size_t r = 0; r < cfg.runs; ++r) {
    auto q = random_point(rng, cfg.d);
    auto t1 = Clock::now();
    double c1 = thread_cpu_ms();
    EncryptedQuery eq = encrypt_query(q, owner.keys());
    out.encrypt_cpu_ms += thread_cpu_ms() - c1;
    out.encrypt_ms += ms_since(t1);
    QueryStats stats;
    auto t2 = Clock::now();
    double c2 = thread_cpu_ms();
    auto res = secure_skyline(*db, eq, &stats);
    out.server_cpu_ms += thread_cpu_ms() - c2;
    out.server_ms += ms_since(t2);
    out.secure_compares += static_cast<double>(stats.secure_compares);
    out.result_size += static_cast<double>(res.size());
    out.ciphertexts += static_cast<double>(eq.ciphertext_count());
  }
  const double k = static_cast<double>(cfg.runs);
  out.encrypt_ms /= k;
  out.server_ms /= k;
  out.encrypt_cpu_ms /= k;
  out.server_cpu_ms /= k;
  out.secure_compares /= k;
  out.result_size /= k;
  out.ciphertexts /= k;
  return out;
}

std::vector<std::vector<double>> time_queries_interleaved(
    const std::vector<QueryConfig>& cfgs, std::size_t rounds) {
  if (cfgs.empty() || rounds == 0) {
    fail(ErrorCode::parameter, "bench: need configs and rounds");
  }
  std::size_t d = 0;
  for (const QueryConfig& cfg : cfgs) d = std::max(d, cfg.d);
  struct Setup {
    std::unique_ptr<CloudDatabase> db;
    OwnerState owner;
  };
  std::vector<Setup> setups;
  for (const QueryConfig& cfg : cfgs) {
    auto records = datagen::generate(cfg.dist, cfg.n, cfg.d, cfg.seed);
    auto [bundle, owner] =
        encrypt_dataset(records, seeded_master_key(cfg.seed), cfg.params);
    setups.push_back(
        {CloudDatabase::ingest(std::move(bundle), cfg.variant), std::move(owner)});
  }
  std::vector<std::vector<double>> out(cfgs.size());
  std::mt19937_64 rng(cfgs.front().seed * 7919 + 17);
  for (std::size_t r = 0; r < rounds; ++r) {
    auto q = random_point(rng, d);
    for (std::size_t k = 0; k < cfgs.size(); ++k) {
      const std::size_t c = (k + r) % cfgs.size();
      auto t0 = Clock::now();
      std::vector<std::uint32_t> qc(q.begin(), q.begin() + cfgs[c].d);
      EncryptedQuery eq = encrypt_query(qc, setups[c].owner.keys());
      secure_skyline(*setups[c].db, eq);
      out[c].push_back(ms_since(t0));
    }
  }
  return out;
}

std::vector<MaintenanceTiming> time_maintenance(
    const MaintenanceConfig& cfg, const std::vector<IndexVariant>& variants) {
  if (cfg.ops == 0 || cfg.runs == 0) {
    fail(ErrorCode::parameter, "bench: ops and runs must be positive");
  }
  auto records = datagen::generate(cfg.dist, cfg.n, cfg.d, cfg.seed);
  auto fresh = datagen::generate(cfg.dist, std::max<std::size_t>(2, cfg.ops * cfg.runs),
                                 cfg.d, cfg.seed + 1);
  auto [bundle, owner] =
      encrypt_dataset(records, seeded_master_key(cfg.seed), cfg.params);
  // Each variant starts from the same snapshot image; keeping that instead
  // of the upload bundle roughly halves peak memory at large n.
  Bytes image;
  {
    auto db = CloudDatabase::ingest(std::move(bundle), IndexVariant::avl);
    image = codec::save_snapshot(*db);
  }

  // One run inserts a batch of fresh records and then deletes the same
  // batch, so every run starts from n records.
  struct Batch {
    std::vector<InsertBundle> inserts;
    std::vector<DeleteRequest> deletes;
  };
  std::vector<Batch> batches(cfg.runs);
  for (std::size_t r = 0; r < cfg.runs; ++r) {
    for (std::size_t i = 0; i < cfg.ops; ++i) {
      PlainRecord rec = fresh[r * cfg.ops + i];
      rec.record_id = cfg.n + 1 + r * cfg.ops + i;
      batches[r].inserts.push_back(prepare_insert(rec, owner));
    }
    for (std::size_t i = 0; i < cfg.ops; ++i) {
      std::uint64_t id = cfg.n + 1 + r * cfg.ops + i;
      batches[r].deletes.push_back(prepare_delete(id, owner));
    }
  }

  std::vector<MaintenanceTiming> out;
  for (IndexVariant v : variants) {
    auto db = codec::load_snapshot(image, v);
    MaintenanceTiming t;
    for (const Batch& b : batches) {
      for (const InsertBundle& ins : b.inserts) {
        InsertBundle copy = ins;
        auto t0 = Clock::now();
        MaintenanceStats st = db->apply_insert(std::move(copy));
        t.insert_ms += ms_since(t0);
        t.insert_compares += static_cast<double>(st.ore_compares);
      }
      for (const DeleteRequest& del : b.deletes) {
        auto t0 = Clock::now();
        db->apply_delete(del);
        t.delete_ms += ms_since(t0);
      }
    }
    const double k = static_cast<double>(cfg.ops * cfg.runs);
    t.insert_ms /= k;
    t.delete_ms /= k;
    t.insert_compares /= k;
    out.push_back(t);
  }
  return out;
}

Sweep parse_sweep(const std::string& name) {
  if (name == "n") return Sweep::n;
  if (name == "d") return Sweep::d;
  if (name == "block") return Sweep::block;
  if (name == "key") return Sweep::key;
  if (name == "index") return Sweep::index;
  fail(ErrorCode::parameter,
       "unknown sweep '" + name + "' (expected n, d, block, key or index)");
}

const char* sweep_name(Sweep s) {
  switch (s) {
    case Sweep::n: return "n";
    case Sweep::d: return "d";
    case Sweep::block: return "block";
    case Sweep::key: return "key";
    case Sweep::index: return "index";
  }
  return "unknown";
}

void run_sweep(const SweepOptions& opts, std::ostream& csv,
               const std::function<void(const std::string&)>& progress) {
  const QueryConfig& base = opts.base;
  auto values = opts.values.empty() ? default_values(opts.sweep, base)
                                    : opts.values;
  csv << "# sweep=" << sweep_name(opts.sweep) << '\n'
      << "# n=" << base.n << '\n'
      << "# d=" << base.d << '\n'
      << "# block=" << int{base.params.block_bits} << '\n'
      << "# key=" << base.params.key_bits << '\n'
      << "# dist=" << datagen::distribution_name(base.dist) << '\n'
      << "# seed=" << base.seed << '\n'
      << "# runs=" << base.runs << '\n';
  csv << std::fixed << std::setprecision(3);

  if (opts.sweep == Sweep::index) {
    csv << "# ops_per_run=" << opts.maintenance_ops << '\n';
    csv << "n,index,insert_ms,delete_ms,insert_compares\n";
    const std::vector<IndexVariant> variants{
        IndexVariant::linked_list, IndexVariant::avl, IndexVariant::red_black};
    for (std::size_t n : values) {
      MaintenanceConfig mc;
      mc.n = n;
      mc.d = base.d;
      mc.params = base.params;
      mc.dist = base.dist;
      mc.seed = base.seed;
      mc.ops = opts.maintenance_ops;
      mc.runs = base.runs;
      auto timings = time_maintenance(mc, variants);
      for (std::size_t i = 0; i < variants.size(); ++i) {
        csv << n << ',' << index_variant_name(variants[i]) << ','
            << timings[i].insert_ms << ',' << timings[i].delete_ms << ','
            << timings[i].insert_compares << '\n';
      }
      csv.flush();
      if (progress) progress("index n=" + std::to_string(n) + " done");
    }
    return;
  }

  csv << sweep_name(opts.sweep)
      << ",encrypt_ms,server_ms,total_ms,total_cpu_ms,secure_compares,"
         "result_size,ciphertexts\n";
  for (std::size_t v : values) {
    QueryConfig qc = base;
    switch (opts.sweep) {
      case Sweep::n: qc.n = v; break;
      case Sweep::d: qc.d = v; break;
      case Sweep::block: qc.params.block_bits = static_cast<std::uint8_t>(v); break;
      case Sweep::key: qc.params.key_bits = static_cast<std::uint16_t>(v); break;
      case Sweep::index: break;
    }
    qc.params.validate();
    QueryTiming t = time_queries(qc);
    csv << v << ',' << t.encrypt_ms << ',' << t.server_ms << ','
        << t.total_ms() << ',' << t.total_cpu_ms() << ',' << t.secure_compares << ',' << t.result_size
        << ',' << t.ciphertexts << '\n';
    csv.flush();
    if (progress) {
      std::ostringstream line;
      line << sweep_name(opts.sweep) << '=' << v << " total_ms="
           << std::fixed << std::setprecision(1) << t.total_ms()
           << " setup_ms=" << t.setup_ms;
      progress(line.str());
    }
  }
}

}  // namespace scale::bench
