#include "otree/enclave.hpp"

#include <cstring>
#include <memory>

#include <openssl/evp.h>

#include "otree/errors.hpp"
#include "otree/prg.hpp"
#include "otree/share_file.hpp"
#include "otree/tree.hpp"

namespace otree {

namespace {

constexpr char kMagic[4] = {'O', 'T', 'E', 'N'};

void put(Bytes& out, u64 v, int n) {
  for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

u64 get(const Bytes& in, std::size_t& pos, int n) {
  if (pos + static_cast<std::size_t>(n) > in.size()) throw TransportError("truncated enclave frame");
  u64 v = 0;
  for (int i = 0; i < n; ++i) v |= u64{in[pos + static_cast<std::size_t>(i)]} << (8 * i);
  pos += static_cast<std::size_t>(n);
  return v;
}

struct CipherCtx {
  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  ~CipherCtx() { EVP_CIPHER_CTX_free(ctx); }
};

}  // namespace

HeuristicOutput oblivious_heuristic(const HeuristicInput& in) {
  const std::size_t n = in.nodes, m = in.features, width = 6 * m;
  if (m == 0 || in.counters.size() != n * width || in.gamma.size() != n * m || in.types.size() != n ||
      in.fallback.size() != n) {
    throw IntegrityError("heuristic input sizes disagree");
  }
  HeuristicOutput out;
  out.decision.resize(n);
  out.gamma = in.gamma;
  out.types = in.types;
  out.child_types.resize(n);
  out.labels.resize(n);
  out.split.resize(n);
  const std::size_t begin = (std::size_t{1} << in.level) - 1;
  using u128 = unsigned __int128;

  for (std::size_t k = 0; k < n; ++k) {
    const u64* c = &in.counters[k * width];
    const u64 psi0 = c[counter_index(m, 1, 0, 0)] + c[counter_index(m, 1, 0, 1)];
    const u64 psi1 = c[counter_index(m, 2, 0, 0)] + c[counter_index(m, 2, 0, 1)];
    const u64 label = oselect(psi0 + psi1 == 0, in.fallback[k], psi0 < psi1 ? 1 : 0);
    out.labels[k] = label;

    // Weighted Gini times the node size: sum_j P_j / n_j.
    u64 used = 0;
    u64 best = 0;
    u128 best_num = 0, best_den = 1;
    bool found = false;
    for (std::size_t f = 0; f < m; ++f) {
      u128 num = 0, den = 1;
      for (unsigned j = 0; j < 2; ++j) {
        const u128 nj = c[counter_index(m, 0, f, j)];
        const u128 n0 = c[counter_index(m, 1, f, j)];
        const u128 n1 = c[counter_index(m, 2, f, j)];
        const u128 p = nj * nj - n0 * n0 - n1 * n1;
        const u128 d = nj == 0 ? 1 : nj;
        num = num * d + p * den;
        den = den * d;
      }
      const bool live = in.gamma[k * m + f] != 0;
      const bool take = live & (!found | oless(num, den, best_num, best_den));
      best = oselect(take, f, best);
      const u128 keep = u128{0} - static_cast<u128>(take);
      best_num = (num & keep) | (best_num & ~keep);
      best_den = (den & keep) | (best_den & ~keep);
      found = found | live;
      used += in.gamma[k * m + f];
    }

    const bool leaf = (psi0 == 0) | (psi1 == 0) | (used == 0);
    const bool split = !in.last & (in.types[k] == kLeaf) & !leaf;
    out.split[k] = split;
    const u64 filler = in.last ? 0 : filler_feature(in.filler_seed, begin + k, m);
    out.decision[k] = oselect(in.last, label, oselect(split, best, filler));
    for (std::size_t f = 0; f < m; ++f) {
      out.gamma[k * m + f] = oselect(split & (f == best), 0, in.gamma[k * m + f]);
    }
    out.types[k] = oselect(split, kInternal, in.types[k]);
    out.child_types[k] = oselect(split, kLeaf, kDummy);
  }
  return out;
}

AeadKey enclave_key(std::uint64_t setup_secret, int party) {
  AeadKey key;
  const Seed lo = derive_seed(setup_secret, "enclave-key-lo", static_cast<u64>(party));
  const Seed hi = derive_seed(setup_secret, "enclave-key-hi", static_cast<u64>(party));
  std::memcpy(key.data(), lo.data(), 16);
  std::memcpy(key.data() + 16, hi.data(), 16);
  return key;
}

Bytes seal(const AeadKey& key, const std::array<std::uint8_t, 12>& nonce, const Bytes& plain) {
  CipherCtx c;
  Bytes out(12 + plain.size() + 16);
  std::memcpy(out.data(), nonce.data(), 12);
  int len = 0;
  if (!c.ctx || EVP_EncryptInit_ex(c.ctx, EVP_aes_256_gcm(), nullptr, key.data(), nonce.data()) != 1 ||
      EVP_EncryptUpdate(c.ctx, out.data() + 12, &len, plain.data(), static_cast<int>(plain.size())) != 1 ||
      EVP_EncryptFinal_ex(c.ctx, out.data() + 12 + len, &len) != 1 ||
      EVP_CIPHER_CTX_ctrl(c.ctx, EVP_CTRL_GCM_GET_TAG, 16, out.data() + 12 + plain.size()) != 1) {
    throw TransportError("frame encryption failed");
  }
  return out;
}

Bytes unseal(const AeadKey& key, const Bytes& frame) {
  if (frame.size() < 28) throw IntegrityError("sealed frame too short");
  CipherCtx c;
  const std::size_t body = frame.size() - 28;
  Bytes plain(body);
  int len = 0;
  Bytes tag(frame.end() - 16, frame.end());
  if (!c.ctx || EVP_DecryptInit_ex(c.ctx, EVP_aes_256_gcm(), nullptr, key.data(), frame.data()) != 1 ||
      EVP_DecryptUpdate(c.ctx, plain.data(), &len, frame.data() + 12, static_cast<int>(body)) != 1 ||
      EVP_CIPHER_CTX_ctrl(c.ctx, EVP_CTRL_GCM_SET_TAG, 16, tag.data()) != 1 ||
      EVP_DecryptFinal_ex(c.ctx, plain.data() + len, &len) != 1) {
    throw IntegrityError("sealed frame failed authentication");
  }
  return plain;
}

Bytes encode_header(const EnclaveHeader& h) {
  Bytes out(kMagic, kMagic + 4);
  put(out, static_cast<u64>(h.op), 1);
  put(out, h.last ? 1 : 0, 1);
  put(out, h.level, 4);
  put(out, h.nodes, 8);
  put(out, h.features, 8);
  put(out, h.filler_seed, 8);
  put(out, h.round, 8);
  return out;
}

EnclaveHeader decode_header(const Bytes& in, std::size_t& pos) {
  if (in.size() < pos + 4 || std::memcmp(in.data() + pos, kMagic, 4) != 0) {
    throw TransportError("not an enclave frame");
  }
  pos += 4;
  EnclaveHeader h;
  const u64 op = get(in, pos, 1);
  if (op != static_cast<u64>(EnclaveOp::kHeuristic) && op != static_cast<u64>(EnclaveOp::kShutdown)) {
    throw TransportError("unknown enclave operation");
  }
  h.op = static_cast<EnclaveOp>(op);
  h.last = get(in, pos, 1) != 0;
  h.level = static_cast<std::uint32_t>(get(in, pos, 4));
  h.nodes = get(in, pos, 8);
  h.features = get(in, pos, 8);
  h.filler_seed = get(in, pos, 8);
  h.round = get(in, pos, 8);
  return h;
}

namespace {

std::array<std::uint8_t, 12> fresh_nonce(Prg& prg) {
  std::array<std::uint8_t, 12> nonce{};
  const u64 r0 = prg.next(), r1 = prg.next();
  std::memcpy(nonce.data(), &r0, 8);
  std::memcpy(nonce.data() + 8, &r1, 4);
  return nonce;
}

void append_file(Bytes& out, const ShareFile& f) {
  const Bytes body = encode_share_file(f);
  put(out, body.size(), 8);
  out.insert(out.end(), body.begin(), body.end());
}

ShareFile take_file(const Bytes& in, std::size_t& pos) {
  const u64 len = get(in, pos, 8);
  if (len > in.size() - pos) throw TransportError("truncated share file in enclave frame");
  Bytes body(in.begin() + static_cast<std::ptrdiff_t>(pos), in.begin() + static_cast<std::ptrdiff_t>(pos + len));
  pos += len;
  return decode_share_file(body);
}

}  // namespace

void serve_enclave(Comm& comm, const std::atomic<bool>& done, const EnclaveOptions& opt) {
  PhaseScope scope(comm, "hc_tee");
  Prg prg(derive_seed(opt.prg_seed, "enclave"));
  std::array<std::optional<AeadKey>, 3> keys;
  if (opt.setup_secret) {
    for (int i = 0; i < 3; ++i) keys[i] = enclave_key(*opt.setup_secret, i);
  }
  const Ring ring(64);

  while (!done) {
    auto in = comm.exchange_round({}, {0, 1, 2});
    std::array<Bytes, 3> plain;
    for (int i = 0; i < 3; ++i) plain[i] = keys[i] ? unseal(*keys[i], in.at(i)) : std::move(in.at(i));

    std::array<EnclaveHeader, 3> hdr;
    std::array<std::size_t, 3> pos{0, 0, 0};
    for (int i = 0; i < 3; ++i) hdr[i] = decode_header(plain[i], pos[i]);
    for (int i = 1; i < 3; ++i) {
      if (encode_header(hdr[i]) != encode_header(hdr[0])) throw IntegrityError("parties disagree on the request");
    }
    if (hdr[0].op == EnclaveOp::kShutdown) return;

    // counters, gamma, types, fallback; each party sends its pair (x_i, x_{i+1}).
    std::array<std::vector<u64>, 4> values;
    for (std::size_t slot = 0; slot < 4; ++slot) {
      std::array<ShareFile, 3> f;
      for (int i = 0; i < 3; ++i) {
        f[i] = take_file(plain[i], pos[i]);
        if (f[i].party != i || f[i].width != 64 || f[i].a.size() != f[0].a.size()) {
          throw IntegrityError("malformed share file from party " + PartyId(i).label());
        }
      }
      for (int i = 0; i < 3; ++i) {
        if (f[i].b != f[(i + 1) % 3].a) throw IntegrityError("inconsistent replicated shares sent to the enclave");
      }
      values[slot].resize(f[0].a.size());
      for (std::size_t k = 0; k < values[slot].size(); ++k) {
        values[slot][k] = f[0].a[k] + f[1].a[k] + f[2].a[k];
      }
    }

    HeuristicInput hin;
    hin.level = hdr[0].level;
    hin.nodes = hdr[0].nodes;
    hin.features = hdr[0].features;
    hin.last = hdr[0].last;
    hin.filler_seed = hdr[0].filler_seed;
    hin.counters = std::move(values[0]);
    hin.gamma = std::move(values[1]);
    hin.types = std::move(values[2]);
    hin.fallback = std::move(values[3]);
    const HeuristicOutput hout = oblivious_heuristic(hin);

    std::array<Bytes, 3> reply;
    for (int i = 0; i < 3; ++i) reply[i] = encode_header(hdr[0]);
    for (const auto* v : {&hout.decision, &hout.gamma, &hout.types, &hout.child_types, &hout.labels, &hout.split}) {
      const std::size_t n = v->size();
      std::array<std::vector<u64>, 3> comp;
      comp[0].resize(n);
      comp[1].resize(n);
      prg.fill(comp[0]);
      prg.fill(comp[1]);
      comp[2].resize(n);
      for (std::size_t k = 0; k < n; ++k) comp[2][k] = ring.sub(ring.sub((*v)[k], comp[0][k]), comp[1][k]);
      for (int i = 0; i < 3; ++i) {
        ShareFile f;
        f.party = i;
        f.width = 64;
        f.rows = n;
        f.a = comp[i];
        f.b = comp[(i + 1) % 3];
        append_file(reply[i], f);
      }
    }
    comm.set_round(hdr[0].round + 1);
    std::vector<std::pair<int, Bytes>> out;
    for (int i = 0; i < 3; ++i) {
      if (keys[i]) {
        reply[i] = seal(*keys[i], fresh_nonce(prg), reply[i]);
      }
      out.emplace_back(i, std::move(reply[i]));
    }
    comm.exchange_round(std::move(out), {});
  }
}

std::vector<AShareVec> enclave_call(Comm& comm, int party, const EnclaveHeader& h,
                                    const std::vector<const AShareVec*>& inputs, const std::optional<AeadKey>& key,
                                    Prg& nonce_prg) {
  Bytes msg = encode_header(h);
  for (const AShareVec* x : inputs) append_file(msg, ShareFile::from(party, *x, x->size(), 1));
  if (key) msg = seal(*key, fresh_nonce(nonce_prg), msg);
  comm.exchange_round({{kEnclaveEndpoint, std::move(msg)}}, {});
  auto in = comm.exchange_round({}, {kEnclaveEndpoint});
  Bytes reply = key ? unseal(*key, in.at(kEnclaveEndpoint)) : std::move(in.at(kEnclaveEndpoint));
  std::size_t pos = 0;
  decode_header(reply, pos);
  std::vector<AShareVec> out;
  while (pos < reply.size()) {
    ShareFile f = take_file(reply, pos);
    if (f.party != party) throw IntegrityError("enclave reply addressed to another party");
    out.push_back(f.arithmetic());
  }
  return out;
}

void enclave_shutdown(Comm& comm, const std::optional<AeadKey>& key, Prg& nonce_prg) {
  EnclaveHeader h;
  h.op = EnclaveOp::kShutdown;
  h.round = comm.rounds();
  Bytes msg = encode_header(h);
  if (key) msg = seal(*key, fresh_nonce(nonce_prg), msg);
  comm.exchange_round({{kEnclaveEndpoint, std::move(msg)}}, {});
}

}  // namespace otree
