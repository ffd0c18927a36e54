#include "dsbayes/manifest.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <memory>
#include <nlohmann/json.hpp>
#include <sstream>

#include "dsbayes/corpus.hpp"
#include "dsbayes/error.hpp"

namespace dsbayes {

std::string sha256_hex(std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &length) != 1) {
    throw Error(ErrorKind::kIo, "SHA-256 computation failed");
  }
  std::ostringstream out;
  for (unsigned int n = 0; n < length; ++n) {
    out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[n]);
  }
  return out.str();
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

void RunManifest::add_input(const std::filesystem::path& path) {
  inputs.push_back({path.string(), sha256_file(path)});
}

void RunManifest::add_artifact(const std::filesystem::path& path) {
  artifacts.push_back({path.string(), sha256_file(path)});
}

namespace {

nlohmann::ordered_json digests_json(const std::vector<FileDigest>& digests) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& d : digests) out.push_back({{"path", d.path}, {"sha256", d.sha256}});
  return out;
}

std::vector<FileDigest> digests_from(const nlohmann::json& j) {
  std::vector<FileDigest> out;
  for (const auto& d : j) out.push_back({d.at("path").get<std::string>(), d.at("sha256").get<std::string>()});
  return out;
}

}  // namespace

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = command;
  j["argv"] = argv;
  j["config"] = nlohmann::ordered_json::parse(config_json);
  j["inputs"] = digests_json(inputs);
  j["seed"] = seed ? nlohmann::ordered_json(*seed) : nlohmann::ordered_json();
  j["artifacts"] = digests_json(artifacts);
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("schema_version").get<int>() != kSchemaVersion) {
      throw ParseError("unsupported manifest schema_version", text);
    }
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.argv = j.at("argv").get<std::vector<std::string>>();
    m.config_json = j.at("config").dump();
    m.inputs = digests_from(j.at("inputs"));
    if (!j.at("seed").is_null()) m.seed = j.at("seed").get<std::uint64_t>();
    m.artifacts = digests_from(j.at("artifacts"));
    m.started_at = j.at("started_at").get<std::string>();
    m.finished_at = j.at("finished_at").get<std::string>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed manifest: ") + e.what(), text);
  }
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  std::ostringstream out;
  out << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

std::filesystem::path write_manifest(const RunManifest& manifest,
                                     const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  std::string stamp = manifest.finished_at;
  for (char& c : stamp) {
    if (c == ':') c = '-';
  }
  const std::string stem = "manifest_" + manifest.command + "_" + stamp;
  for (int n = 0;; ++n) {
    const auto path = directory / (stem + (n == 0 ? "" : "_" + std::to_string(n)) + ".json");
    if (std::filesystem::exists(path)) continue;
    write_file(path, manifest.to_json());
    return path;
  }
}

}  // namespace dsbayes
