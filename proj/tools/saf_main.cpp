#include "saf/dispatch.hpp"
#include "saf/errors.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <thread>
#include <vector>

namespace fs = std::filesystem;

namespace {

int error_code(const std::exception& e) {
    if (dynamic_cast<const saf::ConfigError*>(&e) != nullptr) {
        return 2;
    }
    if (dynamic_cast<const saf::InfeasibleError*>(&e) != nullptr ||
        dynamic_cast<const saf::SynthesisError*>(&e) != nullptr ||
        dynamic_cast<const saf::ControllabilityLossError*>(&e) != nullptr ||
        dynamic_cast<const saf::ConstraintError*>(&e) != nullptr) {
        return 3;
    }
    if (dynamic_cast<const saf::InputError*>(&e) != nullptr) {
        return 4;
    }
    return 1;
}

const char* error_tag(int code) {
    switch (code) {
        case 2: return "config";
        case 3: return "domain";
        case 4: return "input";
        default: return "internal";
    }
}

struct Job {
    fs::path config;
    fs::path out;
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Shunt-active-filter design and closed-loop simulation toolkit"};
    app.require_subcommand(1);

    std::vector<std::string> configs;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    unsigned jobs = 1;
    std::string mode;

    for (const char* name : {"size", "simulate", "analyze"}) {
        CLI::App* sub = app.add_subcommand(
            name, std::string(name) + " using one or more scenario configurations");
        sub->add_option("--config", configs, "scenario configuration file")
            ->required()
            ->expected(-1);
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "override the configured random seed")
            ->each([&](const std::string&) { seed_set = true; });
        sub->add_option("--jobs", jobs, "parallel workers for batch runs")
            ->check(CLI::PositiveNumber);
        sub->add_option("--mode", mode, "override the simulation mode")
            ->check(CLI::IsMember({"continuous", "sampled", "sampled_pwm"}));
    }

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    saf::DispatchOverrides overrides;
    if (seed_set) {
        overrides.seed = seed;
    }
    if (!mode.empty()) {
        overrides.mode = mode == "continuous"
                             ? saf::SimMode::Continuous
                             : (mode == "sampled" ? saf::SimMode::Sampled
                                                  : saf::SimMode::SampledPwm);
    }

    std::vector<Job> batch;
    for (const std::string& c : configs) {
        Job job;
        job.config = c;
        job.out = configs.size() == 1 ? fs::path(out_dir)
                                      : fs::path(out_dir) / job.config.stem();
        batch.push_back(job);
    }

    std::atomic<std::size_t> next{0};
    std::atomic<int> worst{0};
    std::mutex io;
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= batch.size()) {
                return;
            }
            const Job& job = batch[i];
            try {
                const saf::DispatchResult r =
                    saf::dispatch(command, job.config, job.out, overrides);
                std::scoped_lock lock(io);
                std::printf("%s: wrote %zu file(s) to %s\n", job.config.string().c_str(),
                            r.outputs.size(), job.out.string().c_str());
                for (const auto& row : r.compensation) {
                    std::printf("  %7.1f Hz  i_ma=%-10.6g i_la=%-10.6g %s\n", row.f_hz,
                                row.i_ma, row.i_la,
                                row.no_load_content
                                    ? "(no load content)"
                                    : (std::to_string(row.percent) + " %").c_str());
                }
            } catch (const std::exception& e) {
                const int code = error_code(e);
                std::scoped_lock lock(io);
                std::fprintf(stderr, "ERROR %s: %s: %s\n", error_tag(code),
                             job.config.string().c_str(), e.what());
                int cur = worst.load();
                while (cur < code && !worst.compare_exchange_weak(cur, code)) {
                }
            }
        }
    };

    const unsigned n_workers =
        std::min<unsigned>(jobs, static_cast<unsigned>(batch.size()));
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < n_workers; ++i) {
            pool.emplace_back(worker);
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    return worst.load();
}
