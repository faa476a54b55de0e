#include "otree/prg.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <cstring>
#include <stdexcept>

namespace otree {

namespace {
constexpr std::size_t kBlockWords = 1024;
}

struct Prg::Cipher {
  EVP_CIPHER_CTX* ctx = nullptr;
  ~Cipher() { EVP_CIPHER_CTX_free(ctx); }
};

Prg::Prg(const Seed& seed) : cipher_(std::make_unique<Cipher>()), buffer_(kBlockWords) {
  cipher_->ctx = EVP_CIPHER_CTX_new();
  if (cipher_->ctx == nullptr) throw std::runtime_error("EVP_CIPHER_CTX_new failed");
  std::uint8_t iv[16] = {};
  if (EVP_EncryptInit_ex(cipher_->ctx, EVP_aes_128_ctr(), nullptr, seed.data(), iv) != 1) {
    throw std::runtime_error("AES-CTR init failed");
  }
  pos_ = buffer_.size();
}

Prg::Prg(Prg&&) noexcept = default;
Prg& Prg::operator=(Prg&&) noexcept = default;
Prg::~Prg() = default;

void Prg::refill() {
  // Encrypting zeros under CTR yields the raw keystream.
  std::memset(buffer_.data(), 0, buffer_.size() * sizeof(std::uint64_t));
  auto* bytes = reinterpret_cast<unsigned char*>(buffer_.data());
  int out_len = 0;
  const int len = static_cast<int>(buffer_.size() * sizeof(std::uint64_t));
  if (EVP_EncryptUpdate(cipher_->ctx, bytes, &out_len, bytes, len) != 1 || out_len != len) {
    throw std::runtime_error("AES-CTR keystream failed");
  }
  pos_ = 0;
  ++counter_;
}

std::uint64_t Prg::next() {
  if (pos_ == buffer_.size()) refill();
  return buffer_[pos_++];
}

void Prg::fill(std::span<std::uint64_t> out) {
  std::size_t done = 0;
  while (done < out.size()) {
    if (pos_ == buffer_.size()) refill();
    const std::size_t take = std::min(out.size() - done, buffer_.size() - pos_);
    std::memcpy(out.data() + done, buffer_.data() + pos_, take * sizeof(std::uint64_t));
    pos_ += take;
    done += take;
  }
}

Seed Prg::next_seed() {
  Seed s{};
  const std::uint64_t lo = next();
  const std::uint64_t hi = next();
  std::memcpy(s.data(), &lo, 8);
  std::memcpy(s.data() + 8, &hi, 8);
  return s;
}

Seed derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index) {
  std::vector<unsigned char> msg(16 + label.size());
  std::memcpy(msg.data(), &master, 8);
  std::memcpy(msg.data() + 8, &index, 8);
  std::memcpy(msg.data() + 16, label.data(), label.size());
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(msg.data(), msg.size(), digest);
  Seed s{};
  std::memcpy(s.data(), digest, s.size());
  return s;
}

}  // namespace otree
