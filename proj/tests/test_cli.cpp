#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>
#include <string>

#include <sys/wait.h>

#include "anisoheat/digest.hpp"
#include "anisoheat/experiment.hpp"
#include "anisoheat/frozen_kernel.hpp"
#include "anisoheat/kernel_cache.hpp"
#include "anisoheat/report_io.hpp"

using namespace anisoheat;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

json small_config(const std::string& family) {
    json mod = {{"family", family}};
    if (family == "cosine") {
        mod["amplitude"] = 0.3;
        mod["wave_vector"] = {2.0 * kPi / 10.0};
    }
    return {
        {"name", "small"},
        {"problem",
         {{"dimension", 1},
          {"alpha", 1.0},
          {"atoms", {{{"direction", {1.0}}, {"weight", 1.0 / kPi}}, {{"direction", {-1.0}}, {"weight", 1.0 / kPi}}}},
          {"modulation", mod}}},
        {"grid", {{"half_width", 10.0}, {"points", 64}}},
        {"time", {{"horizon", 1.0}, {"intervals", 16}, {"grading", 2.0}, {"anchors", {0.05, 0.1, 0.2, 0.5, 1.0}}}},
    };
}

// Fresh scratch directory per test case.
fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("anisoheat_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string config_error(const json& doc) {
    try {
        parse_config(doc);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ConfigInvalid);
        return e.what();
    }
    return {};
}

int run_cli(const std::string& args) {
    const int status = std::system((std::string(ANISOHEAT_CLI) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing and field paths") {
    const auto c = parse_config(small_config("cosine"));
    CHECK(c.problem.atoms.size() == 2);
    CHECK(c.grid.points == 64);
    CHECK(c.validation.checks == known_checks());
    CHECK(c.tolerance("mass") == 1e-3);
    CHECK(c.theta() == doctest::Approx(0.5));

    auto doc = small_config("cosine");
    doc["grid"]["pionts"] = 64;
    CHECK(config_error(doc).find("grid.pionts: unknown key") != std::string::npos);

    doc = small_config("cosine");
    doc["problem"]["atoms"][1]["weight"] = "heavy";
    CHECK(config_error(doc).find("problem.atoms[1].weight") != std::string::npos);

    doc = small_config("cosine");
    doc["grid"]["points"] = 100;
    CHECK(config_error(doc).find("grid:") != std::string::npos);

    doc = small_config("cosine");
    doc["problem"]["alpha"] = 2.5;
    CHECK(config_error(doc).find("problem:") != std::string::npos);

    doc = small_config("cosine");
    doc["validation"] = {{"tolerances", {{"mas", 1e-3}}}};
    CHECK(config_error(doc).find("validation.tolerances.mas") != std::string::npos);

    doc = small_config("cosine");
    doc["validation"] = {{"checks", {"mass", "masss"}}};
    CHECK(config_error(doc).find("validation.checks[1]") != std::string::npos);

    doc = small_config("cosine");
    doc["series"] = {{"theta", 1.0}};
    CHECK(config_error(doc).find("series.theta") != std::string::npos);

    doc = small_config("cosine");
    doc.erase("problem");
    CHECK(config_error(doc).find("problem: missing") != std::string::npos);
}

TEST_CASE("config hash is canonical") {
    const auto a = parse_config(small_config("cosine"));
    // key order and the output section do not matter
    auto doc = json::parse(small_config("cosine").dump());
    doc["output"] = {{"directory", "elsewhere"}};
    const auto b = parse_config(doc);
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 64);
    // explicit defaults hash like omitted ones
    doc["series"] = {{"max_terms", 40}};
    CHECK(config_hash(parse_config(doc)) == config_hash(a));
    doc["grid"]["points"] = 128;
    CHECK(config_hash(parse_config(doc)) != config_hash(a));
    CHECK(parse_config(to_json(a)).grid.points == a.grid.points);
    CHECK(config_hash(parse_config(to_json(a))) == config_hash(a));
}

TEST_CASE("sha256") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("kernel cache entries") {
    const auto dir = scratch("cache");
    const std::string hash(64, 'a');
    const KernelCache cache(dir, hash);
    KernelCacheEntry e;
    e.config_hash = hash;
    e.node = 3;
    e.time = 0.125;
    e.slices = {0, 5};
    e.points = 4;
    e.values = {1.0, -2.0, std::numeric_limits<double>::denorm_min(), 1e300, 0.1, 0.2, 0.3, 0.4};
    CHECK_FALSE(cache.load(3).has_value());
    cache.store(e);
    const auto back = cache.load(3);
    REQUIRE(back.has_value());
    CHECK(back->values == e.values);
    CHECK(back->slices == e.slices);
    CHECK(back->time == e.time);
    CHECK(cache.hits() == 1);
    CHECK(cache.misses() == 1);
    CHECK_FALSE(fs::exists(cache.entry_path(3).string() + ".tmp"));

    // a byte-swapped writer is read back through the tag
    auto bytes = encode_cache_entry(e);
    auto swapped = bytes;
    auto flip = [&](std::size_t at, std::size_t width) {
        for (std::size_t i = 0; i < width / 2; ++i) std::swap(swapped[at + i], swapped[at + width - 1 - i]);
    };
    flip(4, 4);
    flip(8, 4);
    std::size_t pos = 12 + 64;
    for (int i = 0; i < 4; ++i, pos += 8) flip(pos, 8);
    for (std::size_t i = 0; i < e.slices.size() + e.values.size(); ++i, pos += 8) flip(pos, 8);
    const auto digest = sha256({swapped.data(), swapped.size() - 32});
    std::copy(digest.begin(), digest.end(), swapped.end() - 32);
    const auto decoded = decode_cache_entry(swapped);
    CHECK(decoded.values == e.values);
    CHECK(decoded.node == 3);

    // corruption
    bytes[100] ^= 1;
    CHECK_THROWS_AS(decode_cache_entry(bytes), Error);
    {
        std::ofstream out(cache.entry_path(3), std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }
    try {
        cache.load(3);
        FAIL("corrupt entry was served");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::CacheCorrupt);
    }
    // an entry written for another configuration is never served
    const KernelCache other(dir, std::string(64, 'b'));
    fs::create_directories(other.directory());
    fs::copy_file(dir / hash / "node_3.bin", other.entry_path(3));
    fs::remove(cache.entry_path(3));
    cache.store(e);
    fs::copy_file(cache.entry_path(3), other.entry_path(3), fs::copy_options::overwrite_existing);
    CHECK_THROWS_AS(other.load(3), Error);
    fs::remove_all(dir);
}

TEST_CASE("csv export") {
    const auto dir = scratch("csv");
    const SpatialGrid grid(1, 10.0, 64);
    SpaceTimeKernel k(SliceAxis::Target, {0.0, 1.0}, {}, grid.size());
    CHECK_THROWS_AS(write_kernel_csv(dir / "empty.csv", k, grid, {1}), Error);

    std::vector<std::size_t> all(grid.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    SpaceTimeKernel p(SliceAxis::Target, {0.0, 1.0}, all, grid.size());
    for (std::size_t i = 0; i < p.values.size(); ++i) p.values[i] = std::sin(0.37 * static_cast<double>(i)) / 3.0;
    write_kernel_csv(dir / "p.csv", p, grid, {1});
    const auto rows = read_kernel_csv(dir / "p.csv");
    CHECK(rows.size() == grid.size() * grid.size());
    const auto text = slurp(dir / "p.csv");
    CHECK(text.rfind("t,x,y,value\n", 0) == 0);
    CHECK(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) == grid.size() * grid.size() + 1);
    bool exact = true;
    for (std::size_t s = 0; s < grid.size(); ++s) {
        for (std::size_t x = 0; x < grid.size(); ++x) {
            const auto& r = rows[s * grid.size() + x];
            exact = exact && r.value == p.slice(1, s)[x] && r.x[0] == grid.coordinate(x) && r.y[0] == grid.coordinate(s);
        }
    }
    CHECK(exact);

    // d = 2 header
    const SpatialGrid g2(2, 4.0, 8);
    SpaceTimeKernel q(SliceAxis::Source, {0.5}, {3}, g2.size());
    write_kernel_csv(dir / "q.csv", q, g2, {0});
    CHECK(slurp(dir / "q.csv").rfind("t,x,x2,y,y2,value\n", 0) == 0);
    CHECK(read_kernel_csv(dir / "q.csv").size() == g2.size());

    std::ofstream(dir / "bad.csv") << "t,x,y,value\n1,,2,3\n";
    CHECK_THROWS_AS(read_kernel_csv(dir / "bad.csv"), Error);
    fs::remove_all(dir);
}

TEST_CASE("frozen Cauchy slice survives a round trip") {
    const auto dir = scratch("frozen");
    const JumpKernel cauchy(SpectralMeasure(1, {{{1.0}, 1.0 / kPi}, {{-1.0}, 1.0 / kPi}}), {1, 1.0, 1.0, 2.0},
                            Modulation::constant());
    const SymbolEvaluator s(cauchy);
    const SpatialGrid grid(1, 40.0, 2048);
    FrozenOptions o;
    o.free_space = true;
    const double origin[] = {0.0};
    const auto k = evaluate_frozen(s, origin, 1.0, grid, o);
    const auto free = k.free_space_values();
    write_frozen_csv(dir / "frozen.csv", 1.0, free, grid, grid.origin_index());
    const auto rows = read_kernel_csv(dir / "frozen.csv");
    REQUIRE(rows.size() == grid.size());
    double round_trip = 0.0;
    double closed = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        round_trip = std::max(round_trip, std::abs(rows[j].value - free[grid.difference_index(j, grid.origin_index())]));
        const double x = rows[j].x[0];
        if (std::abs(x) > 20.0) continue;
        const double exact = 1.0 / (kPi * (1.0 + x * x));
        closed = std::max(closed, std::abs(rows[j].value / exact - 1.0));
    }
    CHECK(round_trip <= 1e-15);
    CHECK(closed < 1e-4);
    fs::remove_all(dir);
}

TEST_CASE("report document round trip") {
    ReportDocument doc;
    doc.status = "FAIL";
    doc.config_hash = std::string(64, 'c');
    doc.report.add("a", 0.1 + 0.2, "<=", 1.0);
    doc.report.add("b", std::numeric_limits<double>::infinity(), "finite", 0.0);
    doc.report.add("c", -std::numeric_limits<double>::denorm_min(), "info", std::nan(""));
    doc.report.constants["C"] = 1.0 / 3.0;
    doc.report.constants["huge"] = 1.7976931348623157e308;
    doc.report.tolerances["mass"] = 1e-3;
    doc.report.metadata["grid"] = "R=40 N=256";
    const auto dir = scratch("report");
    write_json(dir / "report.json", to_json(doc));
    const auto back = report_from_json(read_json(dir / "report.json"));
    REQUIRE(back.report.checks.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& x = doc.report.checks[i];
        const auto& y = back.report.checks[i];
        CHECK(x.name == y.name);
        CHECK(x.pass == y.pass);
        CHECK(x.relation == y.relation);
        CHECK((x.value == y.value || (std::isnan(x.value) && std::isnan(y.value))));
        CHECK((x.tolerance == y.tolerance || (std::isnan(x.tolerance) && std::isnan(y.tolerance))));
    }
    CHECK(std::signbit(back.report.checks[2].value));
    CHECK(back.report.constants == doc.report.constants);
    CHECK(back.report.tolerances == doc.report.tolerances);
    CHECK(back.report.metadata == doc.report.metadata);
    CHECK(back.status == "FAIL");
    CHECK(read_json(dir / "report.json")["failures"] == json{"b"});
    fs::remove_all(dir);
}

TEST_CASE("runs are deterministic and the cache is transparent") {
    const auto dir = scratch("run");
    const auto cfg = parse_config(small_config("cosine"));
    RunOptions opt;
    opt.cache_dir = dir / "cache";
    opt.output_dir = dir / "cold";
    const auto cold = run_experiment(cfg, opt);
    CHECK(cold.cache_hits == 0);
    CHECK(cold.cache_misses == cfg.time.intervals + 1);
    opt.output_dir = dir / "warm";
    const auto warm = run_experiment(cfg, opt);
    CHECK(warm.cache_hits == cfg.time.intervals + 1);
    CHECK(warm.report.metadata.at("frozen_source") == "cache");
    opt.cache_dir.reset();
    opt.output_dir = dir / "nocache";
    const auto none = run_experiment(cfg, opt);

    REQUIRE(cold.files.size() == warm.files.size());
    for (const auto& f : cold.files) {
        const auto rel = fs::relative(f, dir / "cold");
        if (rel.extension() != ".csv") continue;
        CHECK(slurp(f) == slurp(dir / "warm" / rel));
        CHECK(slurp(f) == slurp(dir / "nocache" / rel));
    }
    for (const auto& [k, v] : cold.report.constants) CHECK(warm.report.constants.at(k) == v);
    CHECK(none.config_hash == cold.config_hash);

    const auto manifest = read_json(dir / "cold" / "manifest.json");
    CHECK(manifest["config_hash"] == cold.config_hash);
    CHECK(manifest["files"].size() == cold.files.size());
    CHECK(manifest["files"][0]["sha256"] == sha256_file(cold.files[0]));

    const auto doc = report_from_json(read_json(dir / "cold" / "report.json"));
    CHECK(doc.config_hash == cold.config_hash);
    CHECK((doc.status == "PASS") == (cold.exit_code == 0));

    // exports follow --export
    opt.output_dir = dir / "report_only";
    opt.export_mode = ExportMode::Report;
    const auto r = run_experiment(cfg, opt);
    CHECK(r.files.size() == 1);
    CHECK(fs::exists(dir / "report_only" / "report.json"));
    CHECK_FALSE(fs::exists(dir / "report_only" / "kernels"));
    fs::remove_all(dir);
}

TEST_CASE("constant kernel run passes the degeneration checks") {
    auto doc = small_config("constant");
    doc["validation"] = {{"checks", {"degeneration", "mass", "chapman_kolmogorov"}}};
    RunOptions opt;
    opt.write_files = false;
    const auto res = run_experiment(parse_config(doc), opt);
    CHECK(res.exit_code == 0);
    REQUIRE(res.report.checks.size() >= 2);
    CHECK(res.report.checks[0].name == "degeneration.phi");
    CHECK(res.report.checks[0].pass);
    CHECK(res.report.checks[1].pass);
}

TEST_CASE("a failed check is named and sets exit code 1") {
    auto doc = small_config("cosine");
    doc["validation"] = {{"checks", {"mass"}}, {"tolerances", {{"mass", 1e-300}}}};
    RunOptions opt;
    opt.write_files = false;
    const auto res = run_experiment(parse_config(doc), opt);
    CHECK(res.exit_code == 1);
    CHECK_FALSE(res.report.failures().empty());
    CHECK(res.report.failures().front().rfind("mass.", 0) == 0);
}

TEST_CASE("command line exit codes") {
    const auto dir = scratch("cli");
    auto good = small_config("cosine");
    good["validation"] = {{"checks", {"mass", "chapman_kolmogorov"}}};
    good["output"] = {{"directory", (dir / "out").string()}};
    std::ofstream(dir / "good.json") << good.dump();
    auto failing = good;
    failing["validation"]["tolerances"] = {{"mass", 1e-300}};
    std::ofstream(dir / "failing.json") << failing.dump();
    auto typo = good;
    typo["grid"]["pionts"] = 3;
    std::ofstream(dir / "typo.json") << typo.dump();
    auto diverging = good;
    diverging["series"] = {{"max_terms", 1}};
    std::ofstream(dir / "diverging.json") << diverging.dump();

    const std::string cache = " --cache-dir " + (dir / "cache").string();
    CHECK(run_cli("run " + (dir / "good.json").string() + cache) == 0);
    CHECK(fs::exists(dir / "out" / "report.json"));
    CHECK(fs::exists(dir / "out" / "manifest.json"));
    CHECK(run_cli("run " + (dir / "failing.json").string() + " --no-cache") == 1);
    CHECK(run_cli("run " + (dir / "typo.json").string()) == 2);
    CHECK(run_cli("run " + (dir / "diverging.json").string() + " --no-cache") == 3);

    // flip one payload byte of a cached entry
    fs::path entry;
    for (const auto& e : fs::recursive_directory_iterator(dir / "cache")) {
        if (e.path().extension() == ".bin") entry = e.path();
    }
    REQUIRE_FALSE(entry.empty());
    {
        std::fstream f(entry, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(200);
        f.put('\x7f');
    }
    CHECK(run_cli("run " + (dir / "good.json").string() + cache) == 4);
    CHECK(run_cli("run " + (dir / "good.json").string() + " --export nonsense") != 0);
    CHECK(run_cli("--help") == 0);
    fs::remove_all(dir);
}
