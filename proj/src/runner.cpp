#include "otree/runner.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "otree/errors.hpp"

namespace otree {

Metrics SessionTrace::metrics() const {
  return summarize({&transcripts[0], &transcripts[1], &transcripts[2], &enclave_transcript});
}

std::vector<ShapeEntry> SessionTrace::shape() const {
  return transcript_shape({&transcripts[0], &transcripts[1], &transcripts[2], &enclave_transcript});
}

void run_session(const SessionConfig& cfg, const std::function<void(Party&)>& fn, SessionTrace& trace) {
  auto hub = std::make_shared<InProcHub>();
  std::shared_ptr<LazyDealer> dealer;
  std::array<std::unique_ptr<MaterialSource>, 3> owned;
  std::array<MaterialSource*, 3> sources = cfg.material;
  for (int i = 0; i < 3; ++i) {
    if (sources[i]) continue;
    if (!dealer) dealer = std::make_shared<LazyDealer>(cfg.seed ^ 0x6d6174657269616cULL);
    owned[i] = dealer->source(i);
    sources[i] = owned[i].get();
  }

  std::array<Seed, 3> pair_seeds;
  for (int i = 0; i < 3; ++i) pair_seeds[i] = derive_seed(cfg.seed, "pair", static_cast<u64>(i));

  std::mutex err_mu;
  std::exception_ptr first_error;
  bool first_is_transport = false;
  auto record = [&](std::exception_ptr e, bool transport) {
    std::lock_guard lock(err_mu);
    // A root cause beats the transport errors it triggers in the other threads.
    if (!first_error || (first_is_transport && !transport)) {
      first_error = e;
      first_is_transport = transport;
    }
  };

  std::atomic<bool> done{false};
  std::thread enclave_thread;
  if (cfg.enclave) {
    enclave_thread = std::thread([&] {
      Comm comm(hub->endpoint(kEnclaveEndpoint));
      try {
        cfg.enclave(comm, done);
      } catch (const TransportError&) {
        if (!done) record(std::current_exception(), true);
      } catch (...) {
        record(std::current_exception(), false);
        hub->abort("enclave failed");
      }
      trace.enclave_transcript = comm.transcript();
    });
  }

  std::array<std::thread, 3> threads;
  for (int i = 0; i < 3; ++i) {
    threads[i] = std::thread([&, i] {
      Party party(PartyId(i), hub->endpoint(i), *sources[i], cfg.seed);
      party.install_seeds(pair_seeds[i], pair_seeds[(i + 2) % 3]);
      party.debug_checks = cfg.debug_checks;
      party.enclave_attached = static_cast<bool>(cfg.enclave);
      try {
        fn(party);
      } catch (const TransportError&) {
        record(std::current_exception(), true);
        hub->abort("party " + party.id().label() + " failed");
      } catch (...) {
        record(std::current_exception(), false);
        hub->abort("party " + party.id().label() + " failed");
      }
      trace.transcripts[i] = party.comm().transcript();
      trace.consumed[i] = sources[i]->consumed();
    });
  }
  for (auto& t : threads) t.join();
  done = true;
  hub->abort("session closed");
  if (enclave_thread.joinable()) enclave_thread.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace otree
