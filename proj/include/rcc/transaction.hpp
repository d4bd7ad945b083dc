#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "rcc/auth.hpp"
#include "rcc/digest.hpp"
#include "rcc/types.hpp"

namespace rcc {

struct Put {
  std::string key;
  std::string value;
};

struct Get {
  std::string key;
};

// if amount(from) > threshold then withdraw(from, amount); deposit(to, amount)
struct Transfer {
  std::string from;
  std::string to;
  std::uint64_t threshold = 0;
  std::uint64_t amount = 0;
};

struct NoOpCommand {};

using Command = std::variant<Put, Get, Transfer, NoOpCommand>;

void encode(ByteWriter& w, const Command& c);
std::string describe(const Command& c);

// A client-signed batch of commands. Immutable once built; the digest covers
// everything but the signature.
class Transaction {
 public:
  Transaction(ClientId client, std::uint64_t nonce, std::vector<Command> commands, AuthTag signature);

  static Transaction signed_by(const Signer& signer, ClientId client, std::uint64_t nonce,
                               std::vector<Command> commands);
  // Placeholder proposed by an idle primary. Identical at every replica.
  static Transaction noop();

  ClientId client() const { return client_; }
  std::uint64_t nonce() const { return nonce_; }
  bool is_noop() const { return noop_; }
  const std::vector<Command>& commands() const { return commands_; }
  const AuthTag& signature() const { return signature_; }
  const Digest& digest() const { return digest_; }

  // Body followed by signature.
  void encode(ByteWriter& w) const;

 private:
  Transaction() = default;
  static Digest body_digest(ClientId client, std::uint64_t nonce, bool noop,
                            const std::vector<Command>& commands);

  ClientId client_ = kNoClient;
  std::uint64_t nonce_ = 0;
  bool noop_ = false;
  std::vector<Command> commands_;
  AuthTag signature_;
  Digest digest_;
};

using TxnPtr = std::shared_ptr<const Transaction>;

// NoOps carry no signature; everything else must verify against the client.
bool verify_transaction(const Transaction& txn, const KeyRing& keys);

struct TxnKey {
  ClientId client;
  std::uint64_t nonce;
  auto operator<=>(const TxnKey&) const = default;
};

inline TxnKey key_of(const Transaction& t) { return {t.client(), t.nonce()}; }

}  // namespace rcc
