#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "quizgen/domain_json.hpp"
#include "quizgen/gateway.hpp"

namespace quizgen {

struct BackendConfig {
    ModelDescriptor model;
    /// In-process mock behaviour; only for "mock:" endpoints.
    std::optional<MockBehavior> mock;
};

struct Config {
    std::string listen_address = "127.0.0.1:8080";
    std::vector<BackendConfig> backends;
    std::chrono::milliseconds deadline{200};
    std::chrono::milliseconds overhead{50};
    std::filesystem::path store_path = "records.jsonl";
    std::filesystem::path material_dir = "topics";
    std::optional<std::string> embedding_endpoint;
    std::size_t embedding_dimension = 768;
    std::uint64_t seed = 0;

    std::vector<ModelDescriptor> models() const;
};

/// Relative paths are resolved against `base_dir`. Throws ConfigError.
Config parse_config(const Json& j, const std::filesystem::path& base_dir = {});

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

std::optional<std::string> process_env(const std::string& name);

/// QUIZGEN_LISTEN_ADDRESS and QUIZGEN_STORE_PATH override the file.
void apply_env(Config& config, const EnvLookup& env = process_env);

/// Reads the file, then applies environment overrides.
Config load_config(const std::filesystem::path& path, const EnvLookup& env = process_env);

/// Throws ConfigError unless the config can run the server.
void check_serve_config(const Config& config);

/// "host:port" -> (host, port). Throws ConfigError.
std::pair<std::string, int> split_listen_address(const std::string& address);

/// Registers every configured mock; other backends resolve by endpoint.
std::shared_ptr<BackendRegistry> make_registry(const Config& config);

}  // namespace quizgen
