#pragma once

#include <unistd.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "quizgen/domain.hpp"
#include "quizgen/error.hpp"
#include "quizgen/orchestrator.hpp"
#include "quizgen/text.hpp"

namespace quizgen::testing {

inline Timestamp at(std::int64_t seconds) { return Timestamp(std::chrono::seconds(1'700'000'000 + seconds)); }

/// Ticks one second per call.
inline WallClock fake_clock() {
    auto t = std::make_shared<std::atomic<std::int64_t>>(0);
    return [t] { return at(t->fetch_add(1)); };
}

inline ConceptSelection selection(const std::string& topic, const std::string& answer, std::size_t start = 0) {
    ConceptSelection c;
    c.material_ref = topic;
    c.char_start = start;
    c.char_end = start + text::codepoint_length(answer);
    c.answer_text = answer;
    c.word_count = text::count_words(answer);
    return c;
}

inline AnnotationRecord record(const std::string& annotator, const std::string& topic, const std::string& answer,
                               const std::string& question, ModelIdSet models, Judgment judgment,
                               std::int64_t when = 0) {
    AnnotationRecord r;
    r.annotator_id = annotator;
    r.topic_id = topic;
    r.selection = selection(topic, answer);
    r.question_text = question;
    r.model_ids = std::move(models);
    r.judgment = judgment;
    r.timestamp = at(when);
    return r;
}

inline Judgment reject(ErrorSubtype s) { return Judgment::reject(ErrorReason(s)); }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("quizgen-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

template <class F>
ErrorCode error_code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    throw std::logic_error("expected an Error");
}

}  // namespace quizgen::testing

#include "quizgen/gateway.hpp"

namespace quizgen::testing {

inline const char* kLibertyText =
    "The Statue of Liberty is a colossal neoclassical sculpture on Liberty Island in New York Harbor. "
    "The copper statue, a gift from the people of France, was designed by Frederic Auguste Bartholdi "
    "and its metal framework was built by Gustave Eiffel. The statue was dedicated on October 28, 1886. "
    "It depicts Libertas, the Roman goddess of liberty, holding a torch above her head.";

inline const std::vector<std::string> kLibertyConcepts = {
    "Liberty Island", "New York Harbor", "France",         "Frederic Auguste Bartholdi",
    "Gustave Eiffel", "October 28, 1886", "Libertas",      "a torch"};

/// [start, end) of the first occurrence of `phrase` (ASCII material).
inline std::pair<std::int64_t, std::int64_t> span_of(const std::string& text, const std::string& phrase) {
    const auto pos = text.find(phrase);
    if (pos == std::string::npos) throw std::logic_error("phrase not in material: " + phrase);
    return {static_cast<std::int64_t>(pos), static_cast<std::int64_t>(pos + phrase.size())};
}

/// Seven mock backends: m0..m6 with distinct templates except m1 and m2
/// (identical questions) and m6 (delayed past the 200ms deadline).
inline std::vector<MockBehavior> scripted_backends() {
    std::vector<MockBehavior> out;
    const char* templates[] = {"What is {answer}?",
                               "Which place or thing is {answer}?",
                               "Which place or thing is {answer}?",
                               "Why is {answer} mentioned in the text?",
                               "What does the passage say about {answer}?",
                               "Who or what is {answer}?",
                               "Too slow: {answer}?"};
    for (int i = 0; i < 7; ++i) {
        MockBehavior b;
        b.model_id = "m" + std::to_string(i);
        b.question_template = templates[i];
        if (i == 6) b.delay = std::chrono::milliseconds(300);
        out.push_back(std::move(b));
    }
    return out;
}

/// Everything an orchestrator needs, wired to in-process mocks.
struct Deployment {
    TopicCatalog catalog;
    std::shared_ptr<BackendRegistry> registry = std::make_shared<BackendRegistry>();
    std::vector<ModelDescriptor> models;
    std::unique_ptr<ModelGateway> gateway;
    std::unique_ptr<Orchestrator> orchestrator;

    explicit Deployment(std::vector<MockBehavior> backends, RecordSink* sink = nullptr, std::uint64_t seed = 0,
                        std::chrono::milliseconds deadline = std::chrono::milliseconds(200)) {
        Topic topic{"liberty", "Statue of Liberty", "https://en.wikipedia.org/wiki/Statue_of_Liberty"};
        catalog.put(topic, load_material(topic, kLibertyText));
        for (auto& b : backends) {
            const auto id = b.model_id;
            models.push_back({id, "mock:" + id, id});
            registry->add(id, mock_backend(std::move(b)));
        }
        gateway = std::make_unique<ModelGateway>(registry, GatewayConfig{deadline, std::chrono::milliseconds(50)});
        orchestrator = std::make_unique<Orchestrator>(catalog, *gateway, OrchestratorConfig{models, deadline, seed},
                                                      sink, fake_clock());
    }
};

}  // namespace quizgen::testing
