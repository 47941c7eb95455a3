#include "quizgen/cli.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <iostream>
#include <pthread.h>
#include <thread>

#include "quizgen/analytics.hpp"
#include "quizgen/config.hpp"
#include "quizgen/embedding.hpp"
#include "quizgen/error.hpp"
#include "quizgen/report.hpp"
#include "quizgen/server.hpp"
#include "quizgen/store.hpp"

namespace quizgen {

namespace fs = std::filesystem;

namespace {

constexpr const char* kAnalyses[] = {"acceptance", "errors",      "iaa",   "instance-corr",
                                     "system-corr", "upper-bound", "report"};

struct Options {
    std::string config_path;
    // import-material
    std::string topic_id;
    std::string title;
    std::string source_uri;
    std::string text_file;
    std::string material_dir;
    std::size_t word_limit = kMaterialWordLimit;
    // analyze
    std::string which;
    std::string records;
    std::string mapping;
    std::vector<std::string> metrics;
    std::string format = "table";
    std::string embedder = "auto";
    std::optional<std::uint64_t> seed;
};

void print_error(std::ostream& err, std::string_view code, std::string_view message) {
    err << error_body(code, message).dump() << "\n";
}

int serve(const Options& o, std::ostream& out) {
    auto config = o.config_path.empty() ? Config{} : load_config(o.config_path);
    if (o.config_path.empty()) apply_env(config);
    if (o.seed) config.seed = *o.seed;
    check_serve_config(config);
    const auto [host, port] = split_listen_address(config.listen_address);

    TopicCatalog catalog;
    if (fs::exists(config.material_dir)) load_topics(config.material_dir, catalog);
    RecordStore store(config.store_path);
    ModelGateway gateway(make_registry(config), GatewayConfig{config.deadline, config.overhead});
    Orchestrator orchestrator(catalog, gateway, OrchestratorConfig{config.models(), config.deadline, config.seed},
                              &store);
    ApiRouter router(orchestrator, catalog);
    ApiServer server(router);

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    const int bound = server.bind(host, port);
    out << Json{{"status", "listening"}, {"address", host + ":" + std::to_string(bound)},
                {"topics", catalog.topics().size()}, {"backends", config.backends.size()}}
               .dump()
        << std::endl;
    std::thread watcher([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        server.stop();
    });
    server.run();
    pthread_kill(watcher.native_handle(), SIGTERM);
    watcher.join();
    store.close();
    return 0;
}

int import_material_cmd(const Options& o, std::ostream& out) {
    fs::path dir = o.material_dir;
    if (dir.empty()) {
        if (o.config_path.empty()) throw Error(ErrorCode::ConfigError, "--material-dir or --config is required");
        dir = load_config(o.config_path).material_dir;
    }
    Topic topic{o.topic_id, o.title.empty() ? o.topic_id : o.title, o.source_uri};
    TopicCatalog catalog;
    const auto material = import_material(topic, o.text_file, catalog, o.word_limit);
    save_topic(dir, topic, material);
    out << Json{{"topic", to_json(topic)}, {"word_count", material.word_count},
                {"path", (dir / (topic.id + ".json")).string()}}
               .dump()
        << "\n";
    return 0;
}

std::unique_ptr<EmbeddingProvider> make_embedder(const Options& o) {
    std::optional<Config> config;
    if (!o.config_path.empty()) config = load_config(o.config_path);
    std::string kind = o.embedder;
    if (kind == "auto") kind = config && config->embedding_endpoint ? "remote" : "none";
    if (kind == "none") return nullptr;
    if (kind == "hash") {
        return std::make_unique<CachingEmbedder>(std::make_shared<HashEmbedder>(64, o.seed.value_or(0)));
    }
    if (!config || !config->embedding_endpoint) {
        throw Error(ErrorCode::ConfigError, "--embedder remote needs embedding_endpoint in the config");
    }
    auto remote = std::make_shared<RemoteEmbedder>(*config->embedding_endpoint, config->embedding_dimension);
    return std::make_unique<CachingEmbedder>(std::move(remote));
}

Metric single_metric(const Options& o) {
    if (o.metrics.size() != 1) {
        throw Error(ErrorCode::UnknownMetric, "analyze " + o.which + " takes exactly one --metric");
    }
    return parse_metric(o.metrics.front());
}

int analyze(const Options& o, std::ostream& out) {
    std::optional<FieldMapping> mapping;
    if (!o.mapping.empty()) mapping = FieldMapping::load(o.mapping);
    const auto entries = import_records(o.records, mapping ? &*mapping : nullptr);
    const auto records = records_of(entries);
    const bool json = o.format == "json";
    auto emit = [&](const Json& j, const std::string& table) {
        if (json) {
            out << j.dump(2) << "\n";
        } else {
            out << table;
        }
    };

    if (o.which == "acceptance") {
        const auto r = acceptance_rates(records);
        emit(to_json(r), render_table(r));
    } else if (o.which == "errors") {
        const auto r = error_distribution(records);
        emit(to_json(r), render_table(r));
    } else if (o.which == "iaa") {
        const auto r = iaa(records);
        emit(to_json(r), render_table(r));
    } else {
        const auto embedder = make_embedder(o);
        if (o.which == "report") {
            std::vector<Metric> metrics;
            for (const auto& name : o.metrics) metrics.push_back(parse_metric(name));
            if (metrics.empty()) metrics.assign(std::begin(kAllMetrics), std::end(kAllMetrics));
            const auto r = build_metric_report(records, metrics, embedder.get());
            emit(to_json(r), render_table(r));
            return 0;
        }
        const Metric metric = single_metric(o);
        if (o.which == "instance-corr") {
            const auto r = instance_correlation(records, metric, embedder.get());
            emit(to_json(metric, r), render_table(metric, r));
        } else if (o.which == "system-corr") {
            const auto r = system_correlation(records, metric, embedder.get());
            emit(to_json(metric, r), render_table(metric, r));
        } else {
            const auto v = upper_bound(records, metric, embedder.get());
            emit(upper_bound_json(metric, v), upper_bound_table(metric, v));
        }
    }
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Quiz question generation study platform"};
    app.require_subcommand(1);
    Options o;

    auto* serve_cmd = app.add_subcommand("serve", "Run the REST service");
    serve_cmd->add_option("--config", o.config_path, "Config file")->check(CLI::ExistingFile);
    serve_cmd->add_option("--seed", o.seed, "Override the shuffle seed salt");

    auto* import_cmd = app.add_subcommand("import-material", "Ingest a topic's reading material");
    import_cmd->add_option("--topic", o.topic_id, "Topic id")->required();
    import_cmd->add_option("--title", o.title, "Topic title (defaults to the id)");
    import_cmd->add_option("--source-uri", o.source_uri, "Where the text came from");
    import_cmd->add_option("--file", o.text_file, "Plain-text file")->required();
    import_cmd->add_option("--material-dir", o.material_dir, "Topic directory (else taken from --config)");
    import_cmd->add_option("--config", o.config_path, "Config file")->check(CLI::ExistingFile);
    import_cmd->add_option("--word-limit", o.word_limit, "Words kept from the start of the text")
        ->check(CLI::PositiveNumber);

    auto* analyze_cmd = app.add_subcommand("analyze", "Run an analysis over exported records");
    analyze_cmd->add_option("which", o.which, "Analysis")
        ->required()
        ->check(CLI::IsMember(std::vector<std::string>(std::begin(kAnalyses), std::end(kAnalyses))));
    analyze_cmd->add_option("--records", o.records, "Record export (JSONL)")->required();
    analyze_cmd->add_option("--metric", o.metrics, "bleu, rouge1, rougeL, meteor or embed_f1");
    analyze_cmd->add_option("--format", o.format, "table or json")->check(CLI::IsMember({"table", "json"}));
    analyze_cmd->add_option("--mapping", o.mapping, "Field-name mapping for foreign exports")
        ->check(CLI::ExistingFile);
    analyze_cmd->add_option("--embedder", o.embedder, "Embedding provider for embed_f1: auto, none, hash, remote")
        ->check(CLI::IsMember({"auto", "none", "hash", "remote"}));
    analyze_cmd->add_option("--config", o.config_path, "Config file (embedding endpoint)")->check(CLI::ExistingFile);
    analyze_cmd->add_option("--seed", o.seed, "Seed of the hash embedder");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        print_error(err, "UsageError", e.what());
        return 2;
    }

    try {
        if (serve_cmd->parsed()) return serve(o, out);
        if (import_cmd->parsed()) return import_material_cmd(o, out);
        return analyze(o, out);
    } catch (const Error& e) {
        print_error(err, to_string(e.code()), e.what());
        return e.code() == ErrorCode::ConfigError ? 2 : 1;
    } catch (const std::exception& e) {
        print_error(err, "InternalError", e.what());
        return 1;
    }
}

}  // namespace quizgen
