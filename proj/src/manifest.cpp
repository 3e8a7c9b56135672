#include "votetrace/manifest.hpp"

#include "json.hpp"
#include <openssl/evp.h>

#include <array>
#include <memory>
#include <stdexcept>

#ifndef VOTETRACE_VERSION
#define VOTETRACE_VERSION "unknown"
#endif

namespace votetrace {

namespace {

std::string sha256_hex(const std::string& data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 15];
  }
  return hex;
}

}  // namespace

std::string code_version() { return VOTETRACE_VERSION; }

std::string run_hash(const ScenarioConfig& config) {
  return sha256_hex(dump_scenario(config) + "\nseed=" + std::to_string(config.seed) + "\nversion=" + code_version() +
                    "\n");
}

std::string run_manifest(const ScenarioConfig& config, const SimulationStats& stats) {
  nlohmann::ordered_json j;
  j["scenario"] = config.name;
  j["seed"] = config.seed;
  j["code_version"] = code_version();
  j["config_hash"] = run_hash(config);
  j["outputs"] = {{"log", config.log_path}, {"truth", config.truth_path}, {"endpoints", config.log_path + ".endpoints"}};
  j["stats"] = {{"events", stats.events},
                {"packets_injected", stats.packets_injected},
                {"packets_delivered", stats.packets_delivered},
                {"packets_dropped", stats.packets_dropped},
                {"records_kept", stats.records_kept},
                {"circuits_built", stats.circuits_built},
                {"votes_cast", stats.votes_cast},
                {"votes_confirmed", stats.votes_confirmed},
                {"transfers_completed", stats.transfers_completed}};
  j["config"] = dump_scenario(config);
  return j.dump(2) + "\n";
}

}  // namespace votetrace
