#include "rcc/transaction.hpp"

#include <sstream>

namespace rcc {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

enum CommandTag : std::uint8_t { kPut = 1, kGet = 2, kTransfer = 3, kNoOp = 4 };

}  // namespace

void encode(ByteWriter& w, const Command& c) {
  std::visit(Overloaded{
                 [&](const Put& p) { w.u8(kPut).str(p.key).str(p.value); },
                 [&](const Get& g) { w.u8(kGet).str(g.key); },
                 [&](const Transfer& t) { w.u8(kTransfer).str(t.from).str(t.to).u64(t.threshold).u64(t.amount); },
                 [&](const NoOpCommand&) { w.u8(kNoOp); },
             },
             c);
}

std::string describe(const Command& c) {
  std::ostringstream os;
  std::visit(Overloaded{
                 [&](const Put& p) { os << "put(" << p.key << "," << p.value << ")"; },
                 [&](const Get& g) { os << "get(" << g.key << ")"; },
                 [&](const Transfer& t) {
                   os << "transfer(" << t.from << "," << t.to << "," << t.threshold << "," << t.amount << ")";
                 },
                 [&](const NoOpCommand&) { os << "noop"; },
             },
             c);
  return os.str();
}

Digest Transaction::body_digest(ClientId client, std::uint64_t nonce, bool noop,
                                const std::vector<Command>& commands) {
  ByteWriter w;
  w.str("txn").u32(client).u64(nonce).u8(noop ? 1 : 0).u32(static_cast<std::uint32_t>(commands.size()));
  for (const auto& c : commands) rcc::encode(w, c);
  return w.finish();
}

Transaction::Transaction(ClientId client, std::uint64_t nonce, std::vector<Command> commands, AuthTag signature)
    : client_(client),
      nonce_(nonce),
      commands_(std::move(commands)),
      signature_(signature),
      digest_(body_digest(client_, nonce_, false, commands_)) {}

Transaction Transaction::signed_by(const Signer& signer, ClientId client, std::uint64_t nonce,
                                   std::vector<Command> commands) {
  Transaction t(client, nonce, std::move(commands), AuthTag{});
  t.signature_ = signer.sign(t.digest_);
  return t;
}

Transaction Transaction::noop() {
  Transaction t;
  t.noop_ = true;
  t.digest_ = body_digest(kNoClient, 0, true, t.commands_);
  return t;
}

void Transaction::encode(ByteWriter& w) const {
  w.u32(client_).u64(nonce_).u8(noop_ ? 1 : 0).u32(static_cast<std::uint32_t>(commands_.size()));
  for (const auto& c : commands_) rcc::encode(w, c);
  w.bytes(signature_.bytes);
}

bool verify_transaction(const Transaction& txn, const KeyRing& keys) {
  if (txn.is_noop()) return txn.commands().empty() && txn.client() == kNoClient;
  if (txn.client() == kNoClient) return false;
  return keys.verify(client_node(txn.client()), txn.digest(), txn.signature());
}

}  // namespace rcc
