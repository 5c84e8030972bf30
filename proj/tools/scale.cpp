// Operator command line: key generation, dataset encryption, the cloud
// service and its client verbs, oracle fuzzing and benchmark sweeps.

#include <algorithm>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <pthread.h>

#include "CLI11.hpp"
#include "scale/bench.hpp"
#include "scale/codec.hpp"
#include "scale/datagen.hpp"
#include "scale/error.hpp"
#include "scale/owner_client.hpp"
#include "scale/query_engine.hpp"
#include "scale/wire.hpp"

namespace {

using namespace scale;

constexpr char kKeyMagic[4] = {'S', 'C', 'K', 'Y'};
constexpr std::uint8_t kKeyVersion = 1;
constexpr const char* kKeyEnv = "SCALE_KEY_FILE";

Bytes read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::io, "cannot open " + path);
  return Bytes(std::istreambuf_iterator<char>(f), {});
}

void write_file(const std::string& path, ByteView data) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorCode::io, "cannot write " + tmp);
    f.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
    if (!f) fail(ErrorCode::io, "write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    fail(ErrorCode::io, "cannot replace " + path);
  }
}

struct KeyFile {
  ore::OreParams params;
  MasterKey mk{};
};

Bytes encode_key_file(const KeyFile& k) {
  ByteWriter w;
  w.raw(ByteView(reinterpret_cast<const std::uint8_t*>(kKeyMagic), 4));
  w.u8(kKeyVersion);
  w.u8(k.params.block_bits);
  w.u16(k.params.key_bits);
  w.raw(k.mk);
  return w.take();
}

KeyFile decode_key_file(ByteView bytes) {
  try {
    ByteReader r(bytes);
    ByteView magic = r.raw(4);
    if (!std::equal(magic.begin(), magic.end(), kKeyMagic) ||
        r.u8() != kKeyVersion) {
      fail(ErrorCode::format, "not a key file");
    }
    KeyFile k;
    k.params.block_bits = r.u8();
    k.params.key_bits = r.u16();
    k.params.validate();
    ByteView mk = r.raw(k.mk.size());
    std::copy(mk.begin(), mk.end(), k.mk.begin());
    r.expect_done("key file");
    return k;
  } catch (const Error& e) {
    fail(ErrorCode::format, std::string("key file: ") + e.what());
  }
}

// The environment variable overrides --keys.
KeyFile load_keys(const std::string& flag_path) {
  std::string path = flag_path;
  if (const char* env = std::getenv(kKeyEnv); env != nullptr && *env != '\0') {
    path = env;
  }
  if (path.empty()) {
    fail(ErrorCode::parameter,
         std::string("no key file: pass --keys or set ") + kKeyEnv);
  }
  return decode_key_file(read_file(path));
}

OwnerState load_state(const std::string& path, const KeyFile& keys) {
  OwnerState st = parse_owner_state(read_file(path), keys.params);
  if (st.keys().master_key() != keys.mk) {
    fail(ErrorCode::parameter, "owner state " + path +
                                   " was created under a different key file");
  }
  return st;
}

std::vector<std::uint32_t> parse_values(const std::string& text) {
  std::vector<std::uint32_t> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(cell, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != cell.size()) {
      fail(ErrorCode::parameter, "not a non-negative integer: '" + cell + "'");
    }
    if (v > kMaxAttribute) {
      fail(ErrorCode::overflow, "value " + cell + " exceeds 2^31-1");
    }
    out.push_back(static_cast<std::uint32_t>(v));
  }
  if (out.empty()) fail(ErrorCode::parameter, "empty value list");
  return out;
}

void print_records(const std::vector<PlainRecord>& recs) {
  const std::size_t d = recs.empty() ? 0 : recs.front().attrs.size();
  std::cout << "id";
  for (std::size_t j = 1; j <= d; ++j) std::cout << ",x" << j;
  std::cout << '\n';
  for (const auto& r : recs) {
    std::cout << r.record_id;
    for (auto v : r.attrs) std::cout << ',' << v;
    std::cout << '\n';
  }
}

std::unique_ptr<wire::SocketTransport> dial(const std::string& addr,
                                            std::uint32_t max_frame) {
  auto [host, port] = wire::parse_address(addr);
  return wire::SocketTransport::connect(host, port, max_frame);
}

IndexVariant parse_variant(const std::string& s) {
  if (s == "list") return IndexVariant::linked_list;
  if (s == "avl") return IndexVariant::avl;
  if (s == "rbtree") return IndexVariant::red_black;
  fail(ErrorCode::parameter, "unknown index '" + s + "' (list, avl, rbtree)");
}

ore::OreParams make_params(int block, int key) {
  ore::OreParams p;
  p.block_bits = static_cast<std::uint8_t>(block);
  p.key_bits = static_cast<std::uint16_t>(key);
  p.validate();
  return p;
}

// A fuzzing instance: records and one query point.
struct VerifyCase {
  std::vector<PlainRecord> records;
  std::vector<std::uint32_t> q;
};

bool case_passes(const VerifyCase& c, const ore::OreParams& params,
                 const MasterKey& mk, IndexVariant variant) {
  auto [bundle, st] = encrypt_dataset(c.records, mk, params);
  auto db = CloudDatabase::ingest(std::move(bundle), variant);
  auto res = decrypt_results(secure_skyline(*db, encrypt_query(c.q, st.keys())),
                             st.keys().payload_key());
  std::vector<std::uint64_t> got;
  for (const auto& r : res) got.push_back(r.record_id);
  std::sort(got.begin(), got.end());
  return got == dynamic_skyline_bnl(c.records, c.q) &&
         got == dynamic_skyline_bruteforce(c.records, c.q);
}

// Greedy one-at-a-time removal while the mismatch persists.
VerifyCase minimize(VerifyCase c, const ore::OreParams& params,
                    const MasterKey& mk, IndexVariant variant) {
  bool shrunk = true;
  while (shrunk && c.records.size() > 2) {
    shrunk = false;
    for (std::size_t i = 0; i < c.records.size() && c.records.size() > 2; ++i) {
      VerifyCase smaller = c;
      smaller.records.erase(smaller.records.begin() +
                            static_cast<std::ptrdiff_t>(i));
      if (!case_passes(smaller, params, mk, variant)) {
        c = std::move(smaller);
        shrunk = true;
        --i;
      }
    }
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Secure dynamic skyline queries over order-revealing encryption"};
  app.require_subcommand(1);
  int block = 16, key = 256;
  std::uint32_t max_frame = wire::kDefaultMaxFrame;
  auto add_params = [&](CLI::App* c) {
    c->add_option("--block", block, "ORE block size in bits (2, 4, 8, 16)")
        ->capture_default_str();
    c->add_option("--key", key, "AES key length in bits (128, 192, 256)")
        ->capture_default_str();
  };
  auto add_frame = [&](CLI::App* c) {
    c->add_option("--max-frame", max_frame, "largest accepted frame payload")
        ->capture_default_str();
  };
  std::string keys_path, state_path, connect_addr;
  auto add_keys = [&](CLI::App* c) {
    c->add_option("--keys", keys_path,
                  std::string("key file (overridden by ") + kKeyEnv + ")");
  };

  // keygen
  auto* keygen = app.add_subcommand("keygen", "create a master key file");
  std::string key_out;
  keygen->add_option("--out", key_out, "key file to write")->required();
  add_params(keygen);

  // encrypt
  auto* encrypt = app.add_subcommand("encrypt", "encrypt a CSV dataset");
  std::string csv_in, bundle_out;
  std::vector<std::string> columns;
  int scale_exp = 0;
  encrypt->add_option("--in", csv_in, "CSV with a header row")->required();
  encrypt->add_option("--out", bundle_out, "upload bundle to write")->required();
  encrypt->add_option("--state", state_path,
                      "owner state to write (default: <out>.owner)");
  encrypt->add_option("--columns", columns, "attribute columns (names or indices)")
      ->delimiter(',');
  encrypt->add_option("--scale", scale_exp,
                      "multiply decimal inputs by 10^k before rounding")
      ->check(CLI::Range(0, 9));
  add_keys(encrypt);

  // gen
  auto* gen = app.add_subcommand("gen", "write a synthetic dataset as CSV");
  std::string dist_name = "inde", gen_out;
  std::size_t n = 1000, d = 3;
  std::uint64_t seed = 1;
  gen->add_option("--dist", dist_name, "inde, corr or anti")->capture_default_str();
  gen->add_option("--n", n)->capture_default_str();
  gen->add_option("--d", d)->capture_default_str();
  gen->add_option("--seed", seed)->capture_default_str();
  gen->add_option("--out", gen_out, "CSV file to write")->required();

  // serve
  auto* serve = app.add_subcommand("serve", "run the cloud service");
  std::string db_path, listen_addr = "127.0.0.1:7878", index_name = "avl";
  serve->add_option("--db", db_path,
                    "snapshot loaded at start (if present) and saved on exit");
  serve->add_option("--listen", listen_addr)->capture_default_str();
  serve->add_option("--index", index_name, "list, avl or rbtree")
      ->capture_default_str();
  add_frame(serve);

  // upload
  auto* upload = app.add_subcommand("upload", "send an upload bundle");
  std::string bundle_in;
  upload->add_option("--bundle", bundle_in)->required();
  upload->add_option("--connect", connect_addr)->required();
  add_frame(upload);

  // query
  auto* query = app.add_subcommand("query", "run a dynamic skyline query");
  std::string q_text;
  query->add_option("--q", q_text, "query point v1,v2,...")->required();
  query->add_option("--connect", connect_addr)->required();
  query->add_option("--state", state_path, "owner state")->required();
  add_keys(query);
  add_frame(query);

  // insert
  auto* insert = app.add_subcommand("insert", "insert a record");
  std::string rec_text;
  std::uint64_t rec_id = 0;
  insert->add_option("--rec", rec_text, "attributes v1,v2,...")->required();
  insert->add_option("--id", rec_id, "record id (default: next free)");
  insert->add_option("--connect", connect_addr)->required();
  insert->add_option("--state", state_path, "owner state, updated in place")
      ->required();
  add_keys(insert);
  add_frame(insert);

  // delete
  auto* del = app.add_subcommand("delete", "delete a record");
  std::uint64_t del_id = 0;
  del->add_option("--id", del_id)->required();
  del->add_option("--connect", connect_addr)->required();
  del->add_option("--state", state_path, "owner state, updated in place")
      ->required();
  add_keys(del);
  add_frame(del);

  // verify
  auto* verify = app.add_subcommand(
      "verify", "compare secure results with both plaintext oracles");
  std::size_t trials = 20, queries = 5;
  std::string verify_dist = "all";
  verify->add_option("--n", n, "records per instance")->capture_default_str();
  verify->add_option("--d", d)->capture_default_str();
  verify->add_option("--dist", verify_dist, "inde, corr, anti or all")
      ->capture_default_str();
  verify->add_option("--trials", trials)->capture_default_str();
  verify->add_option("--queries", queries, "queries per instance")
      ->capture_default_str();
  verify->add_option("--seed", seed)->capture_default_str();
  verify->add_option("--index", index_name)->capture_default_str();
  add_params(verify);

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "timing sweeps, CSV output");
  std::string sweep_name = "n", bench_out;
  std::vector<std::size_t> values;
  std::size_t runs = 10, ops = 10;
  bench_cmd->add_option("--sweep", sweep_name, "n, d, block, key or index")
      ->capture_default_str();
  bench_cmd->add_option("--values", values, "override the swept values")
      ->delimiter(',');
  bench_cmd->add_option("--n", n, "records (fixed parameter)");
  bench_cmd->add_option("--d", d, "dimensions (fixed parameter)");
  bench_cmd->add_option("--dist", dist_name)->capture_default_str();
  bench_cmd->add_option("--seed", seed)->capture_default_str();
  bench_cmd->add_option("--runs", runs)->capture_default_str();
  bench_cmd->add_option("--ops", ops, "inserts and deletes per run (index)")
      ->capture_default_str();
  bench_cmd->add_option("--index", index_name, "index for query sweeps")
      ->capture_default_str();
  bench_cmd->add_option("--out", bench_out, "CSV file (default: stdout)");
  add_params(bench_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*keygen) {
      KeyFile k;
      k.params = make_params(block, key);
      k.mk = generate_master_key();
      write_file(key_out, encode_key_file(k));
      std::cerr << "wrote " << key_out << '\n';
      return 0;
    }
    if (*gen) {
      datagen::write_csv(gen_out, datagen::generate(
                                      datagen::parse_distribution(dist_name),
                                      n, d, seed));
      return 0;
    }
    if (*encrypt) {
      KeyFile k = load_keys(keys_path);
      datagen::CsvOptions opts;
      opts.columns = columns;
      for (int i = 0; i < scale_exp; ++i) opts.scale *= 10;
      auto records = datagen::load_csv(csv_in, opts);
      auto [bundle, st] = encrypt_dataset(records, k.mk, k.params);
      write_file(bundle_out, codec::encode_upload(bundle));
      std::string owner_path = state_path.empty() ? bundle_out + ".owner"
                                                  : state_path;
      write_file(owner_path, serialize_owner_state(st));
      std::cerr << "encrypted " << records.size() << " records, d="
                << st.d() << ", " << bundle.sums.size() << " sums; state in "
                << owner_path << '\n';
      return 0;
    }
    if (*serve) {
      IndexVariant variant = parse_variant(index_name);
      std::unique_ptr<CloudDatabase> db;
      if (!db_path.empty()) {
        std::ifstream probe(db_path, std::ios::binary);
        // An explicit --index rebuilds the stored trees in that variant.
        if (probe) {
          db = codec::load_snapshot(
              read_file(db_path),
              serve->count("--index") ? std::optional(variant) : std::nullopt);
        }
      }
      if (db != nullptr) variant = db->variant();
      // Signals are taken synchronously on this thread only.
      sigset_t sigs;
      sigemptyset(&sigs);
      sigaddset(&sigs, SIGINT);
      sigaddset(&sigs, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &sigs, nullptr);
      wire::Service service(std::move(db), variant);
      wire::Server server(service, max_frame);
      auto [host, port] = wire::parse_address(listen_addr);
      server.listen(host, port);
      server.start();
      std::cerr << "listening on " << host << ':' << server.port() << '\n';
      int sig = 0;
      sigwait(&sigs, &sig);
      server.stop();
      if (!db_path.empty()) {
        if (auto cur = service.database()) {
          write_file(db_path, codec::save_snapshot(*cur));
          std::cerr << "saved snapshot to " << db_path << '\n';
        }
      }
      return 0;
    }
    if (*upload) {
      Bytes raw = read_file(bundle_in);
      auto sock = dial(connect_addr, max_frame);
      wire::Client(*sock).upload(codec::decode_upload(raw));
      std::cerr << "uploaded\n";
      return 0;
    }
    if (*query) {
      KeyFile k = load_keys(keys_path);
      OwnerState st = load_state(state_path, k);
      auto q = parse_values(q_text);
      auto t0 = std::chrono::steady_clock::now();
      EncryptedQuery eq = encrypt_query(q, st.keys());
      auto t1 = std::chrono::steady_clock::now();
      auto sock = dial(connect_addr, max_frame);
      auto results = wire::Client(*sock).query(eq);
      auto t2 = std::chrono::steady_clock::now();
      auto recs = decrypt_results(results, st.keys().payload_key());
      print_records(recs);
      using ms = std::chrono::duration<double, std::milli>;
      std::cerr << recs.size() << " records; encrypt "
                << ms(t1 - t0).count() << " ms, round trip "
                << ms(t2 - t1).count() << " ms, " << eq.ciphertext_count()
                << " query ciphertexts\n";
      return 0;
    }
    if (*insert) {
      KeyFile k = load_keys(keys_path);
      OwnerState st = load_state(state_path, k);
      PlainRecord rec;
      rec.attrs = parse_values(rec_text);
      if (rec_id == 0) {
        for (const auto& r : st.records()) rec_id = std::max(rec_id, r.record_id);
        ++rec_id;
      }
      rec.record_id = rec_id;
      InsertBundle b = prepare_insert(rec, st);
      auto sock = dial(connect_addr, max_frame);
      wire::Client(*sock).insert(b);
      // Persist only after the cloud accepted the bundle.
      write_file(state_path, serialize_owner_state(st));
      std::cout << rec.record_id << '\n';
      return 0;
    }
    if (*del) {
      KeyFile k = load_keys(keys_path);
      OwnerState st = load_state(state_path, k);
      DeleteRequest r = prepare_delete(del_id, st);
      auto sock = dial(connect_addr, max_frame);
      wire::Client(*sock).remove(r);
      write_file(state_path, serialize_owner_state(st));
      return 0;
    }
    if (*verify) {
      ore::OreParams params = make_params(block, key);
      IndexVariant variant = parse_variant(index_name);
      std::vector<datagen::Distribution> dists;
      if (verify_dist == "all") {
        dists = {datagen::Distribution::inde, datagen::Distribution::corr,
                 datagen::Distribution::anti};
      } else {
        dists = {datagen::parse_distribution(verify_dist)};
      }
      MasterKey mk = generate_master_key();
      for (std::size_t t = 0; t < trials; ++t) {
        std::uint64_t s = seed + t;
        auto dist = dists[t % dists.size()];
        auto records = datagen::generate(dist, n, d, s);
        auto [bundle, st] = encrypt_dataset(records, mk, params);
        auto db = CloudDatabase::ingest(std::move(bundle), variant);
        std::mt19937_64 rng(s);
        for (std::size_t qi = 0; qi < queries; ++qi) {
          std::vector<std::uint32_t> q(d);
          switch (qi % 3) {
            case 0:  // uniform in the domain
              for (auto& v : q) v = static_cast<std::uint32_t>(rng() % (datagen::kDomainMax + 1));
              break;
            case 1:  // at a record
              q = records[rng() % records.size()].attrs;
              break;
            default:  // beyond the domain
              for (auto& v : q) v = datagen::kDomainMax + 1 + static_cast<std::uint32_t>(rng() % 1000);
              break;
          }
          auto res = decrypt_results(secure_skyline(*db, encrypt_query(q, st.keys())),
                                     st.keys().payload_key());
          std::vector<std::uint64_t> got;
          for (const auto& r : res) got.push_back(r.record_id);
          std::sort(got.begin(), got.end());
          if (got == dynamic_skyline_bnl(records, q) &&
              got == dynamic_skyline_bruteforce(records, q)) {
            continue;
          }
          std::cerr << "MISMATCH trial=" << t << " seed=" << s
                    << " dist=" << datagen::distribution_name(dist)
                    << " query#" << qi << '\n';
          VerifyCase small = minimize({records, q}, params, mk, variant);
          std::cerr << "minimized to " << small.records.size()
                    << " records; q=";
          for (std::size_t j = 0; j < q.size(); ++j) {
            std::cerr << (j ? "," : "") << q[j];
          }
          std::cerr << " ids=";
          for (std::size_t i = 0; i < small.records.size(); ++i) {
            std::cerr << (i ? "," : "") << small.records[i].record_id;
          }
          std::cerr << '\n';
          return 1;
        }
      }
      std::cout << "verify: " << trials << " instances x " << queries
                << " queries, 0 mismatches\n";
      return 0;
    }
    if (*bench_cmd) {
      bench::SweepOptions opts;
      opts.sweep = bench::parse_sweep(sweep_name);
      opts.values = values;
      opts.maintenance_ops = ops;
      opts.base.params = make_params(block, key);
      opts.base.dist = datagen::parse_distribution(dist_name);
      opts.base.seed = seed;
      opts.base.runs = runs;
      opts.base.variant = parse_variant(index_name);
      opts.base.n = bench_cmd->count("--n") ? n : 2500;
      opts.base.d = bench_cmd->count("--d") ? d : 3;
      auto progress = [](const std::string& line) {
        std::cerr << line << '\n';
      };
      if (bench_out.empty()) {
        bench::run_sweep(opts, std::cout, progress);
      } else {
        std::ofstream f(bench_out, std::ios::trunc);
        if (!f) fail(ErrorCode::io, "cannot write " + bench_out);
        bench::run_sweep(opts, f, progress);
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error (" << error_code_name(e.code()) << "): " << e.what()
              << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
