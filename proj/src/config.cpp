#include "quizgen/config.hpp"

#include <charconv>
#include <cstdlib>

#include "quizgen/error.hpp"
#include "quizgen/store.hpp"

namespace quizgen {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

std::string string_at(const Json& j, const char* key, const std::string& where) {
    const auto& v = j.at(key);
    if (!v.is_string()) config_error(where + key + " must be a string");
    return v.get<std::string>();
}

std::int64_t positive_ms(const Json& j, const char* key) {
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() <= 0) config_error(std::string(key) + " must be a positive integer");
    return v.get<std::int64_t>();
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_relative() && !base.empty() ? base / path : path;
}

MockBehavior parse_mock(const Json& j, const ModelId& model_id) {
    if (!j.is_object()) config_error("mock for " + model_id + " must be an object");
    const std::string where = "backends[" + model_id + "].mock.";
    MockBehavior b;
    b.model_id = j.contains("model_id") ? string_at(j, "model_id", where) : model_id;
    if (j.contains("template")) b.question_template = string_at(j, "template", where);
    if (j.contains("canned")) {
        const auto& c = j.at("canned");
        if (!c.is_object()) config_error(where + "canned must be an object");
        for (const auto& [answer, q] : c.items()) {
            if (!q.is_string()) config_error(where + "canned values must be strings");
            b.canned[answer] = q.get<std::string>();
        }
    }
    if (j.contains("delay_ms")) {
        const auto& d = j.at("delay_ms");
        if (!d.is_number_integer() || d.get<std::int64_t>() < 0) config_error(where + "delay_ms must be >= 0");
        b.delay = std::chrono::milliseconds(d.get<std::int64_t>());
    }
    if (j.contains("error")) b.error = string_at(j, "error", where);
    if (j.contains("raw_body")) b.raw_body = string_at(j, "raw_body", where);
    return b;
}

}  // namespace

std::vector<ModelDescriptor> Config::models() const {
    std::vector<ModelDescriptor> out;
    out.reserve(backends.size());
    for (const auto& b : backends) out.push_back(b.model);
    return out;
}

Config parse_config(const Json& j, const fs::path& base_dir) {
    if (!j.is_object()) config_error("config must be a JSON object");
    Config c;
    try {
        if (j.contains("listen_address")) c.listen_address = string_at(j, "listen_address", "");
        if (j.contains("deadline_ms")) c.deadline = std::chrono::milliseconds(positive_ms(j, "deadline_ms"));
        if (j.contains("overhead_ms")) c.overhead = std::chrono::milliseconds(positive_ms(j, "overhead_ms"));
        if (j.contains("store_path")) c.store_path = resolve(base_dir, string_at(j, "store_path", ""));
        else c.store_path = resolve(base_dir, c.store_path.string());
        if (j.contains("material_dir")) c.material_dir = resolve(base_dir, string_at(j, "material_dir", ""));
        else c.material_dir = resolve(base_dir, c.material_dir.string());
        if (j.contains("embedding_endpoint") && !j.at("embedding_endpoint").is_null()) {
            c.embedding_endpoint = string_at(j, "embedding_endpoint", "");
        }
        if (j.contains("embedding_dimension")) {
            const auto& d = j.at("embedding_dimension");
            if (!d.is_number_integer() || d.get<std::int64_t>() <= 0) config_error("embedding_dimension must be > 0");
            c.embedding_dimension = d.get<std::size_t>();
        }
        if (j.contains("seed")) {
            const auto& s = j.at("seed");
            if (!s.is_number_unsigned()) config_error("seed must be a non-negative integer");
            c.seed = s.get<std::uint64_t>();
        }
        if (j.contains("backends")) {
            const auto& arr = j.at("backends");
            if (!arr.is_array()) config_error("backends must be an array");
            for (const auto& b : arr) {
                BackendConfig bc;
                try {
                    Json desc = b;
                    if (desc.is_object() && !desc.contains("endpoint") && desc.contains("mock") && desc.contains("model_id")) {
                        desc["endpoint"] = "mock:" + desc.at("model_id").get<std::string>();
                    }
                    bc.model = model_from_json(desc);
                } catch (const Error& e) {
                    config_error(std::string("invalid backend: ") + e.what());
                }
                if (b.contains("mock")) {
                    if (bc.model.endpoint.rfind("mock:", 0) != 0) {
                        config_error("backend " + bc.model.model_id + " has a mock block but a non-mock endpoint");
                    }
                    bc.mock = parse_mock(b.at("mock"), bc.model.model_id);
                }
                c.backends.push_back(std::move(bc));
            }
            check_unique_models(c.models());
        }
    } catch (const Json::exception& e) {
        config_error(std::string("invalid config: ") + e.what());
    }
    return c;
}

std::optional<std::string> process_env(const std::string& name) {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
}

void apply_env(Config& config, const EnvLookup& env) {
    if (auto v = env("QUIZGEN_LISTEN_ADDRESS")) config.listen_address = *v;
    if (auto v = env("QUIZGEN_STORE_PATH")) config.store_path = *v;
}

Config load_config(const fs::path& path, const EnvLookup& env) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error& e) {
        config_error(e.what());
    }
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        config_error(path.string() + " is not valid JSON: " + e.what());
    }
    auto config = parse_config(j, path.parent_path());
    apply_env(config, env);
    return config;
}

void check_serve_config(const Config& config) {
    if (config.backends.empty()) config_error("at least one backend must be configured");
    split_listen_address(config.listen_address);
}

std::pair<std::string, int> split_listen_address(const std::string& address) {
    const auto colon = address.rfind(':');
    if (colon == std::string::npos || colon == 0) config_error("listen_address must be host:port, got " + address);
    int port = -1;
    const auto* first = address.data() + colon + 1;
    const auto* last = address.data() + address.size();
    auto [ptr, ec] = std::from_chars(first, last, port);
    if (ec != std::errc{} || ptr != last || port < 0 || port > 65535) {
        config_error("invalid port in listen_address " + address);
    }
    return {address.substr(0, colon), port};
}

std::shared_ptr<BackendRegistry> make_registry(const Config& config) {
    auto registry = std::make_shared<BackendRegistry>();
    for (const auto& b : config.backends) {
        if (b.mock) registry->add(b.model.model_id, mock_backend(*b.mock));
    }
    return registry;
}

}  // namespace quizgen
