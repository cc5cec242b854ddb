// sufforge: suffix-array construction over a sharded read store.
//
//   sufforge serve     --shard-index I --shard-count N --listen HOST:PORT
//   sufforge gen       --count N --length L --seed K [--paired] --output F
//   sufforge build     --input F [--input F2] --output DIR [options]
//   sufforge verify    --input F [--input F2] --against DIR
//   sufforge footprint --predict ... | --normalize REPORT --reference input|output

#include "sufforge/error.hpp"
#include "sufforge/footprint_model.hpp"
#include "sufforge/oracle.hpp"
#include "sufforge/pipeline.hpp"
#include "sufforge/read_store.hpp"
#include "sufforge/report.hpp"
#include "sufforge/verify.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>

namespace {

using namespace sufforge;
namespace fs = std::filesystem;

enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kUsage = 2,
    kConfig = 3,
    kIngest = 4,
    kTransport = 5,
    kMismatch = 6,
    kPipeline = 7,
};

struct ServeArgs {
    std::size_t shard_index = 0;
    std::size_t shard_count = 1;
    std::string listen = "127.0.0.1:7000";
};

struct GenArgs {
    GenOptions gen;
    bool paired = false;
    fs::path output;
};

struct BuildArgs {
    PipelineConfig config;
    std::vector<std::string> inputs;
    std::vector<std::string> store;
    std::string mode = "indexed";
    bool embedded_store = false;
    std::string report;
    std::string partition_table;
    std::string config_file;
};

struct VerifyArgs {
    std::vector<std::string> inputs;
    fs::path against;
    bool indexes_only = false;
};

struct FootprintArgs {
    bool predict = false;
    double spills = 0;
    double data_bytes = 0;
    double buffer_bytes = 0;
    double fraction = 0.8;
    std::uint64_t factor = 10;
    double shuffle_units = 1.0;
    std::string normalize;
    std::string reference = "input";
    double speedup = 0;
    double mem_base = 0;
    double mem_extra = 0;
};

int run_serve(const ServeArgs& args) {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    Shard shard(args.shard_index, args.shard_count);
    ShardServer server(shard, parse_endpoint(args.listen));
    std::cout << "shard " << args.shard_index << "/" << args.shard_count << " listening on "
              << server.endpoint().to_string() << std::endl;
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
    std::cout << "shard " << args.shard_index << " stopping: " << shard.read_count() << " reads, "
              << shard.text_bytes() << " text bytes, ~" << shard.footprint_bytes() << " resident bytes\n";
    return kOk;
}

int run_gen(const GenArgs& args) {
    const auto reads = gen_reads(args.gen);
    write_reads_tsv(args.output, reads);
    std::cout << "wrote " << reads.size() << " reads to " << args.output.string() << '\n';
    if (args.paired) {
        const fs::path mate = args.output.string() + ".2";
        write_reads_tsv(mate, paired_mates(reads));
        std::cout << "wrote " << reads.size() << " mates to " << mate.string() << '\n';
    }
    return kOk;
}

/// Fills options left unset on the command line from a key = value file.
/// Keys are long option names without dashes; a [build] section is allowed.
void apply_config_file(CLI::App& cmd, const std::string& path) {
    std::vector<CLI::ConfigItem> items;
    try {
        items = cmd.get_config_formatter_base()->from_file(path);
    } catch (const CLI::Error& e) {
        throw ConfigError("cannot read config file " + path + ": " + e.what());
    }
    for (const auto& item : items) {
        if (item.name == "++" || item.name == "--")
            continue; // section markers
        if (!item.parents.empty() && item.parents != std::vector<std::string>{"build"})
            throw ConfigError(path + ": unknown section for key " + item.fullname());
        auto* opt = cmd.get_option_no_throw("--" + item.name);
        if (opt == nullptr || item.name == "config")
            throw ConfigError(path + ": unknown key '" + item.name + "'");
        if (opt->count() > 0)
            continue;
        try {
            opt->add_result(item.inputs);
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw ConfigError(path + ": bad value for '" + item.name + "': " + e.what());
        }
    }
}

int run_build(BuildArgs& args, bool shards_given) {
    auto& config = args.config;
    for (const auto& in : args.inputs)
        config.inputs.emplace_back(in);
    config.mode = parse_mode(args.mode);

    std::unique_ptr<StoreCluster> store;
    if (args.embedded_store) {
        store = std::make_unique<EmbeddedCluster>(config.shards, EmbeddedTransport::tcp);
    } else {
        std::vector<Endpoint> endpoints;
        for (const auto& ep : args.store)
            endpoints.push_back(parse_endpoint(ep));
        if (!endpoints.empty()) {
            if (shards_given && config.shards != endpoints.size())
                throw ConfigError("--shards " + std::to_string(config.shards) + " disagrees with " +
                                  std::to_string(endpoints.size()) + " --store endpoints");
            config.shards = endpoints.size();
        }
        config.validate();
        store = std::make_unique<RemoteCluster>(std::move(endpoints));
    }

    const auto report = build_sa(config, *store);
    const fs::path report_path = args.report.empty() ? config.output / "report.json" : fs::path(args.report);
    {
        std::ofstream out(report_path);
        out << report_to_json(report) << '\n';
        if (!out)
            throw ConfigError("cannot write report " + report_path.string());
    }
    if (!args.partition_table.empty())
        PartitionTable(report.partition_boundaries).save(args.partition_table);

    std::cout << "built suffix array: " << report.suffix_count << " suffixes in " << report.outputs.size()
              << " part files (" << std::fixed << std::setprecision(1) << report.times.total_ms << " ms)\n";
    std::cout << "shuffle bytes " << report.counters.at(Phase::shuffle, Metric::bytes_shuffled) << ", report "
              << report_path.string() << '\n';
    print_unit_table(std::cout, normalize(report.counters, UnitReference::input));
    return kOk;
}

int run_verify(const VerifyArgs& args) {
    std::vector<fs::path> inputs(args.inputs.begin(), args.inputs.end());
    const auto result = verify_against_oracle(inputs, args.against, args.indexes_only);
    std::cout << "ok: " << result.lines << " lines across " << result.part_files << " part files match the oracle\n";
    return kOk;
}

int run_footprint(const FootprintArgs& args) {
    if (args.predict) {
        double raw = args.spills;
        if (raw <= 0) {
            if (args.data_bytes <= 0 || args.buffer_bytes <= 0)
                throw ConfigError("--predict needs --spills or both --data-bytes and --buffer-bytes");
            raw = spill_count(args.data_bytes, args.buffer_bytes, args.fraction).raw;
        }
        const auto plan = plan_merge(raw, args.factor);
        std::cout << std::fixed << std::setprecision(2);
        std::cout << "spill_count_raw      " << plan.spill_count_raw << '\n'
                  << "spill_files          " << plan.spill_count_files << '\n'
                  << "intermediate_rounds  " << plan.intermediate_rounds << '\n'
                  << "files_consumed       " << plan.files_consumed << '\n'
                  << "merge_units          " << plan.read_units << '\n'
                  << "total_units          " << plan.read_units * args.shuffle_units << '\n';
        return kOk;
    }
    if (!args.normalize.empty()) {
        const auto report = load_report(args.normalize);
        UnitReference ref;
        if (args.reference == "input")
            ref = UnitReference::input;
        else if (args.reference == "output")
            ref = UnitReference::output;
        else
            throw ConfigError("--reference must be input or output");
        print_unit_table(std::cout, normalize(report.counters, ref));
        return kOk;
    }
    if (args.speedup > 0) {
        const double ratio = mem_ratio(args.mem_base, args.mem_extra);
        std::cout << std::fixed << std::setprecision(3) << "mem_ratio   " << ratio << '\n'
                  << std::setprecision(2) << "efficiency  " << efficiency(args.speedup, ratio) << "%\n";
        return kOk;
    }
    throw ConfigError("footprint needs --predict, --normalize or --speedup");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sufforge: suffix-array construction with a sharded in-memory read store"};
    app.require_subcommand(1);

    ServeArgs serve;
    auto* serve_cmd = app.add_subcommand("serve", "run one read-store shard");
    serve_cmd->add_option("--shard-index", serve.shard_index)->required();
    serve_cmd->add_option("--shard-count", serve.shard_count)->required()->check(CLI::PositiveNumber);
    serve_cmd->add_option("--listen", serve.listen, "HOST:PORT")->capture_default_str();

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen", "generate random reads as seq<TAB>read lines");
    gen_cmd->add_option("--count", gen.gen.count)->required();
    gen_cmd->add_option("--length", gen.gen.length)->required();
    gen_cmd->add_option("--seed", gen.gen.seed)->capture_default_str();
    gen_cmd->add_flag("--paired", gen.paired, "also write reversed mates to <output>.2");
    gen_cmd->add_option("--output", gen.output)->required();

    BuildArgs build;
    auto& bc = build.config;
    auto* build_cmd = app.add_subcommand("build", "construct the suffix array");
    build_cmd->add_option("--config", build.config_file, "key = value file; flags override it");
    build_cmd->add_option("--input", build.inputs, "seq<TAB>read file (one, or two for paired-end)")
        ->required()
        ->expected(1, 2);
    build_cmd->add_option("--output", bc.output, "directory for part files")->required();
    build_cmd->add_option("--mappers", bc.mappers)->capture_default_str();
    build_cmd->add_option("--reducers", bc.reducers)->capture_default_str();
    auto* shards_opt = build_cmd->add_option("--shards", bc.shards)->capture_default_str();
    build_cmd->add_option("--prefix-len", bc.prefix_len)->capture_default_str();
    build_cmd->add_option("--threshold", bc.threshold, "suffixes accumulated before fetch-and-sort")
        ->capture_default_str();
    build_cmd->add_option("--mode", build.mode, "indexed|materialized")->capture_default_str();
    build_cmd->add_option("--seed", bc.seed)->capture_default_str();
    build_cmd->add_option("--sample-per-partition", bc.samples_per_partition)->capture_default_str();
    build_cmd->add_option("--map-buffer-bytes", bc.map_buffer_bytes)->capture_default_str();
    build_cmd->add_option("--spill-fraction", bc.spill_fraction)->capture_default_str();
    build_cmd->add_option("--merge-factor", bc.merge_factor)->capture_default_str();
    build_cmd->add_option("--max-group-size", bc.max_group_size)->capture_default_str();
    build_cmd->add_flag("--indexes-only", bc.indexes_only, "write packed indexes without suffix text");
    build_cmd->add_flag("--keep-work", bc.keep_work, "keep spill and run files under <output>/_work");
    build_cmd->add_option("--store", build.store, "shard endpoint HOST:PORT, in shard order");
    build_cmd->add_flag("--embedded-store", build.embedded_store, "spawn loopback shards in this process");
    build_cmd->add_option("--report", build.report, "run report path (default <output>/report.json)");
    build_cmd->add_option("--partition-table", build.partition_table, "write sampled boundaries here");

    VerifyArgs verify;
    auto* verify_cmd = app.add_subcommand("verify", "diff pipeline output against the brute-force oracle");
    verify_cmd->add_option("--input", verify.inputs)->required()->expected(1, 2);
    verify_cmd->add_option("--against", verify.against)->required();
    verify_cmd->add_flag("--indexes-only", verify.indexes_only);

    FootprintArgs fp;
    auto* fp_cmd = app.add_subcommand("footprint", "merge-cost prediction and unit normalization");
    fp_cmd->add_flag("--predict", fp.predict);
    fp_cmd->add_option("--spills", fp.spills, "raw (fractional) spill count");
    fp_cmd->add_option("--data-bytes", fp.data_bytes);
    fp_cmd->add_option("--buffer-bytes", fp.buffer_bytes);
    fp_cmd->add_option("--fraction", fp.fraction)->capture_default_str();
    fp_cmd->add_option("--factor", fp.factor)->capture_default_str();
    fp_cmd->add_option("--shuffle-units", fp.shuffle_units)->capture_default_str();
    fp_cmd->add_option("--normalize", fp.normalize, "run report JSON");
    fp_cmd->add_option("--reference", fp.reference, "input|output")->capture_default_str();
    fp_cmd->add_option("--speedup", fp.speedup);
    fp_cmd->add_option("--mem-base", fp.mem_base);
    fp_cmd->add_option("--mem-extra", fp.mem_extra);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*serve_cmd)
            return run_serve(serve);
        if (*gen_cmd)
            return run_gen(gen);
        if (*build_cmd) {
            if (!build.config_file.empty())
                apply_config_file(*build_cmd, build.config_file);
            return run_build(build, shards_opt->count() > 0);
        }
        if (*verify_cmd)
            return run_verify(verify);
        if (*fp_cmd)
            return run_footprint(fp);
    } catch (const VerifyMismatch& e) {
        std::cerr << "mismatch: " << e.what() << '\n';
        return kMismatch;
    } catch (const TransportError& e) {
        std::cerr << "transport error: " << e.what() << '\n';
        return kTransport;
    } catch (const IngestError& e) {
        std::cerr << "ingestion error: " << e.what() << '\n';
        return kIngest;
    } catch (const PipelineError& e) {
        std::cerr << "pipeline error: " << e.what() << '\n';
        return kPipeline;
    } catch (const RangeError& e) {
        std::cerr << "range error: " << e.what() << '\n';
        return kConfig;
    } catch (const EncodingError& e) {
        std::cerr << "encoding error: " << e.what() << '\n';
        return kConfig;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInternal;
    }
    return kUsage;
}
