#include "CLI11.hpp"
#include "rsum/cases.hpp"
#include "rsum/certificates.hpp"
#include "rsum/compare.hpp"
#include "rsum/dist.hpp"
#include "rsum/elimination.hpp"
#include "rsum/flips.hpp"
#include "rsum/gridcert.hpp"
#include "rsum/parallel.hpp"
#include "rsum/prawitz.hpp"
#include "rsum/report.hpp"
#include "rsum/weights.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

using namespace rsum;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::string json_path;
    unsigned jobs = 0;
    bool floats = false;
};

Globals G;

// exact unless --float, in which case the text goes through a double first
Rational num(const std::string& s) {
    if (G.floats) {
        std::size_t pos = 0;
        double d = std::stod(s, &pos);
        if (pos != s.size() || !std::isfinite(d)) throw ParseError("not a number: '" + s + "'");
        return Rational(d);
    }
    return parse_rational(s);
}

double dnum(const std::string& s) { return num(s).get_d(); }

std::string out_path(const std::string& p) {
    if (p.empty() || p == "-") return p;
    std::filesystem::path path(p);
    const char* dir = std::getenv("RSUM_OUTPUT_DIR");
    if (path.is_relative() && dir && *dir) path = std::filesystem::path(dir) / path;
    return path.string();
}

struct WeightInput {
    std::string file, list;

    void attach(CLI::App* app) {
        app->add_option("-w,--weights", file, "weight file, one rational per line");
        app->add_option("-l,--list", list, "comma-separated weights");
    }
    WeightVector get() const {
        if (file.empty() == list.empty()) throw UsageError("give exactly one of --weights or --list");
        if (!file.empty()) {
            if (G.floats) {
                std::ifstream in(file);
                if (!in) throw ParseError("cannot open weight file '" + file + "'");
                std::vector<Rational> a;
                std::string line;
                while (std::getline(in, line)) {
                    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
                    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
                    a.push_back(num(std::string(detail::trim(line))));
                }
                return WeightVector(std::move(a));
            }
            return WeightVector::load(file);
        }
        if (G.floats) {
            std::vector<Rational> a;
            std::stringstream ss(list);
            std::string tok;
            while (std::getline(ss, tok, ','))
                if (!detail::trim(tok).empty()) a.push_back(num(std::string(detail::trim(tok))));
            return WeightVector(std::move(a));
        }
        return WeightVector::parse_list(list);
    }
};

json weights_json(const WeightVector& w) {
    json a = json::array();
    for (const auto& x : w.weights()) a.push_back(jq(x));
    return a;
}

// Runs one command body, writes the report, maps the verdict to an exit code.
int finish(Report& rep, const std::function<void(Report&)>& body) {
    auto t0 = std::chrono::steady_clock::now();
    int code = 0;
    try {
        body(rep);
        code = rep.verdict == Verdict::verified ? 0 : 1;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        rep.verdict = Verdict::error;
        rep.details["error"] = e.what();
        code = 2;
    } catch (const std::exception& e) {
        std::cerr << "input error: " << e.what() << '\n';
        rep.verdict = Verdict::error;
        rep.details["error"] = e.what();
        code = 2;
    }
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << rep.command << ": " << verdict_name(rep.verdict) << '\n';
    if (!G.json_path.empty()) {
        std::string p = out_path(G.json_path);
        if (p == "-") std::cout << rep.to_json().dump(2) << '\n';
        else write_json(p, rep.to_json());
    }
    return code;
}

Verdict of(bool ok) { return ok ? Verdict::verified : Verdict::violated; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact and rigorous checks for Rademacher sums"};
    app.require_subcommand(1);
    app.add_option("--json", G.json_path, "write a JSON report here ('-' for stdout)");
    app.add_option("--jobs", G.jobs, "worker threads (default: all cores)");
    app.add_flag("--float", G.floats, "read numeric inputs as doubles instead of exact decimals");

    std::function<int()> run;

    // dist
    WeightInput dist_w;
    auto* dist = app.add_subcommand("dist", "exact distribution of X");
    dist_w.attach(dist);
    dist->callback([&] {
        run = [&] {
            Report rep{"dist"};
            return finish(rep, [&](Report& r) {
                WeightVector w = dist_w.get();
                r.inputs["weights"] = weights_json(w);
                ExactDist d(w);
                json atoms = json::array();
                for (const auto& [v, p] : d.atoms()) {
                    atoms.push_back({jq(v), jq(p)});
                    std::cout << v << '\t' << p << '\n';
                }
                r.details["atoms"] = atoms;
                r.details["variance"] = jq(w.variance());
                r.verdict = Verdict::verified;
            });
        };
    });

    // check
    WeightInput check_w;
    auto* check = app.add_subcommand("check", "Pr[|X| <= sqrt V] >= 1/2, exactly");
    check_w.attach(check);
    check->callback([&] {
        run = [&] {
            Report rep{"check"};
            return finish(rep, [&](Report& r) {
                WeightVector w = check_w.get();
                r.inputs["weights"] = weights_json(w);
                ExactDist d(w);
                auto t = check_tomaszewski(d);
                Rational open = d.prob_lt(w.sigma()) - d.prob_le(-w.sigma());
                r.details["prob_abs_le_1"] = jq(t.prob);
                r.details["prob_abs_lt_1"] = jq(open);
                std::cout << "Pr[|X| <= sqrt V] = " << t.prob << "\nPr[|X| < sqrt V] = " << open << '\n';
                r.verdict = of(t.holds);
            });
        };
    });

    // duality
    WeightInput dual_w;
    std::string dual_t;
    auto* dual = app.add_subcommand("duality", "Pr[|X| < t] >= Pr[|X| > 1/t] on the normalized scale");
    dual_w.attach(dual);
    dual->add_option("-t,--t", dual_t, "t > 0")->required();
    dual->callback([&] {
        run = [&] {
            Report rep{"duality"};
            return finish(rep, [&](Report& r) {
                WeightVector w = dual_w.get();
                Rational t = num(dual_t);
                r.inputs = {{"weights", weights_json(w)}, {"t", jq(t)}};
                auto d = check_scale_duality(w, t);
                r.details = {{"lhs", jq(d.lhs)}, {"rhs", jq(d.rhs)}};
                std::cout << d.lhs << " >= " << d.rhs << '\n';
                r.verdict = of(d.holds);
            });
        };
    });

    // eliminate
    WeightInput elim_w;
    std::size_t elim_m = 1;
    auto* elim = app.add_subcommand("eliminate", "m-variable elimination thresholds and tail sum");
    elim_w.attach(elim);
    elim->add_option("-m,--m", elim_m, "number of eliminated weights (1..5)")->check(CLI::Range(1, 5));
    elim->callback([&] {
        run = [&] {
            Report rep{"eliminate"};
            return finish(rep, [&](Report& r) {
                WeightVector w = elim_w.get();
                r.inputs = {{"weights", weights_json(w)}, {"m", elim_m}};
                auto e = eliminate(w, elim_m);
                ExactDist dr(e.reduced);
                json th = json::array();
                for (const auto& t : e.thresholds) th.push_back(jsurd(t));
                Rational sum = e.tail_sum(dr);
                Rational lhs = pow2q(static_cast<unsigned>(elim_m)) * ExactDist(w).prob_gt(w.sigma());
                r.details = {{"thresholds", th}, {"sigma_sq", jq(e.sigma_sq)}, {"tail_sum", jq(sum)},
                             {"scaled_prob", jq(lhs)}, {"bound", jq(pow2q(static_cast<unsigned>(elim_m)) / 4)}};
                std::cout << "sum_j Pr[X' > T_j] = " << sum << " (2^m Pr[X > 1] = " << lhs << ")\n";
                r.verdict = of(sum == lhs && e.holds(dr));
            });
        };
    });

    // flips-test
    WeightInput flip_w;
    std::string flip_q = "1";
    auto* flips = app.add_subcommand("flips-test", "exhaustive audit of the prefix, single and recursive flips");
    flip_w.attach(flips);
    flips->add_option("-Q,--Q", flip_q, "prefix-flip shift, in the units of the weights");
    flips->callback([&] {
        run = [&] {
            Report rep{"flips-test"};
            return finish(rep, [&](Report& r) {
                WeightVector w = flip_w.get();
                Rational Q = num(flip_q);
                r.inputs = {{"weights", weights_json(w)}, {"Q", jq(Q)}};
                auto a = audit_flips(w, Q);
                r.details = {{"prefix", a.prefix_ok}, {"single", a.single_ok}, {"recursive", a.recursive_ok},
                             {"prefix_domain", a.prefix_domain}, {"single_domain", a.single_domain}};
                if (!a.witness.empty()) r.details["witness"] = a.witness;
                r.verdict = of(a.ok());
            });
        };
    });

    // seg-compare
    WeightInput seg_w;
    std::string sA, sB, sC, sD, sM, seg_ends = "half";
    auto* seg = app.add_subcommand("seg-compare", "Pr<C,D> <= Pr<A,B> under the comparison lemmas");
    seg_w.attach(seg);
    seg->add_option("--A", sA)->required();
    seg->add_option("--B", sB)->required();
    seg->add_option("--C", sC)->required();
    seg->add_option("--D", sD)->required();
    seg->add_option("--M", sM, "bound on the largest weight (default: the actual one)");
    seg->add_option("--ends", seg_ends, "segment type: half, closed or open")
        ->check(CLI::IsMember({"half", "closed", "open"}));
    seg->callback([&] {
        run = [&] {
            Report rep{"seg-compare"};
            return finish(rep, [&](Report& r) {
                WeightVector w = seg_w.get();
                Rational M = sM.empty() ? w.max_weight() : num(sM);
                CompareQuad qd{num(sA), num(sB), num(sC), num(sD), M};
                r.inputs = {{"weights", weights_json(w)}, {"A", jq(num(sA))}, {"B", jq(num(sB))},
                            {"C", jq(num(sC))},          {"D", jq(num(sD))}, {"M", jq(M)}, {"ends", seg_ends}};
                ExactDist d(w);
                End e = seg_ends == "closed" ? End::closed : seg_ends == "open" ? End::open : End::half;
                auto c = e == End::half ? check_seg_compare(d, qd) : check_other_segment_types(d, qd, e, e);
                r.details = {{"lhs", jq(c.lhs)}, {"rhs", jq(c.rhs)}, {"relation", relation_name(c.relation)}};
                std::cout << c.lhs << " <= " << c.rhs << " (" << relation_name(c.relation) << ")\n";
                r.verdict = of(c.holds);
            });
        };
    });

    // prawitz
    std::string pa1 = "0.31", px = "1", pT = "10", pq = "0.4", pbound;
    double ptarget = 1e-6;
    bool prig = false, pfast = false;
    auto* pr = app.add_subcommand("prawitz", "bound on Pr[Z < x] - Pr[X < x] for largest normalized weight a1");
    pr->add_option("--a1", pa1);
    pr->add_option("--x", px);
    pr->add_option("--T", pT);
    pr->add_option("--q", pq);
    pr->add_option("--target", ptarget, "error budget per integral");
    pr->add_option("--bound", pbound, "verified when the upper edge is at most this");
    pr->add_flag("--rigorous", prig, "rigorous enclosure (the default)");
    pr->add_flag("--fast", pfast, "plain adaptive quadrature, no enclosure");
    pr->callback([&] {
        run = [&] {
            Report rep{"prawitz"};
            return finish(rep, [&](Report& r) {
                if (prig && pfast) throw UsageError("--rigorous and --fast exclude each other");
                PrawitzParams p{num(pa1), dnum(px), dnum(pT), dnum(pq), 0, 0, 0, ptarget};
                r.inputs = {{"a1", jq(p.a1)}, {"x", p.x}, {"T", p.T}, {"q", p.q}, {"rigorous", !pfast}};
                auto b = prawitz_bound(p, !pfast);
                r.details = {{"S1", jencl(b.S1)}, {"S2", jencl(b.S2)}, {"S3", jencl(b.S3)},
                             {"S4", jencl(b.S4)}, {"total", jencl(b.total)}, {"panels", {b.N1, b.N2, b.N3}}};
                std::cout.precision(10);
                std::cout << "bound in [" << b.total.lower() << ", " << b.total.upper() << "]\n";
                bool ok = true;
                if (!pbound.empty()) {
                    double lim = dnum(pbound);
                    r.inputs["bound"] = lim;
                    ok = b.total.upper() <= lim;
                }
                r.verdict = of(ok);
            });
        };
    });

    // verify-sequence
    double seq_target = 1e-6;
    auto* seq = app.add_subcommand("verify-sequence", "margin check on every consecutive pair of the 94-point grid");
    seq->add_option("--target", seq_target, "error budget per integral");
    seq->callback([&] {
        run = [&] {
            Report rep{"verify-sequence"};
            return finish(rep, [&](Report& r) {
                SequenceSettings s;
                s.target = seq_target;
                r.inputs = {{"a1", jq(s.a1)}, {"T", s.T}, {"q", s.q}, {"threshold", s.threshold},
                            {"required_margin", s.required_margin}, {"target", s.target}};
                auto rep2 = verify_sequence(sequence_points(), s, [](const PairCheck& c) {
                    std::cerr << "pair " << c.i << " [" << c.x0 << ", " << c.x1 << ") margin " << c.margin
                              << (c.ok ? "" : "  FAIL") << '\n';
                });
                json pairs = json::array();
                for (const auto& c : rep2.checks)
                    pairs.push_back({{"i", c.i}, {"x0", c.x0}, {"x1", c.x1}, {"bound", jencl(c.bound)},
                                     {"gauss_step", jencl(c.gauss_step)}, {"margin", c.margin}, {"ok", c.ok}});
                r.details = {{"pairs", pairs}, {"min_margin", rep2.min_margin}, {"argmin", rep2.argmin},
                             {"endpoint_bound", jencl(rep2.endpoint_bound)}, {"endpoint_ok", rep2.endpoint_ok}};
                std::cout << rep2.pairs << " pairs, min margin " << rep2.min_margin << " at pair " << rep2.argmin << '\n';
                r.verdict = of(rep2.ok());
            });
        };
    });

    // verify-net
    std::string rows_csv;
    auto* net = app.add_subcommand("verify-net", "211 x 211 net bound for the four-tail function");
    net->add_option("--rows-csv", rows_csv, "write the per-row maxima as CSV");
    net->callback([&] {
        run = [&] {
            Report rep{"verify-net"};
            return finish(rep, [&](Report& r) {
                auto g = verify_net31(!rows_csv.empty(), G.jobs);
                auto spec = net31_spec();
                r.inputs = {{"lipschitz", spec.lipschitz}, {"pointwise_bound", spec.pointwise_bound},
                            {"target_bound", spec.target_bound}};
                r.details = {{"points", g.points},           {"max", g.max_value},
                             {"argmax", g.argmax},           {"covering_radius", g.covering_radius},
                             {"certified_bound", g.certified_bound}, {"covering_ok", g.covering_ok},
                             {"pointwise_ok", g.pointwise_ok}};
                std::cout.precision(10);
                std::cout << "max " << g.max_value << " at (" << g.argmax.at(0) << ", " << g.argmax.at(1)
                          << "), certified bound " << g.certified_bound << '\n';
                if (!rows_csv.empty()) {
                    std::ofstream out(out_path(rows_csv));
                    if (!out) throw std::runtime_error("cannot write '" + rows_csv + "'");
                    out << g.rows_csv();
                }
                r.verdict = of(g.ok());
            });
        };
    });

    // verify-certs
    std::string cat_path = default_catalog_path();
    bool no_delegates = false;
    auto* certs = app.add_subcommand("verify-certs", "check every certificate in the catalog");
    certs->add_option("--catalog", cat_path, "catalog file");
    certs->add_flag("--no-delegates", no_delegates, "skip entries checked by other modules");
    certs->callback([&] {
        run = [&] {
            Report rep{"verify-certs"};
            return finish(rep, [&](Report& r) {
                r.inputs = {{"catalog", cat_path}};
                auto cat = load_catalog(cat_path);
                auto cr = verify_catalog(cat, !no_delegates, G.jobs);
                json entries = json::array();
                for (const auto& e : cr.entries) {
                    json j{{"id", e.id}, {"ok", e.ok()}, {"identity", e.identity_ok}, {"signs", e.signs_ok},
                           {"region", e.region_ok}, {"vertices", e.vertices}};
                    if (!e.ok()) {
                        j["failure"] = failure_name(e.failure);
                        j["item"] = e.failed_item;
                        std::cout << "FAIL " << e.id << ": " << failure_name(e.failure) << " " << e.failed_item << '\n';
                    }
                    entries.push_back(j);
                }
                json del = json::array();
                for (const auto& d : cr.delegates) del.push_back({{"id", d.id}, {"module", d.module}, {"ok", d.ok}, {"detail", d.detail}});
                r.details = {{"entries", entries}, {"delegates", del}, {"passed", cr.passed()}, {"total", cr.entries.size()}};
                std::cout << cr.passed() << "/" << cr.entries.size() << " certificates pass\n";
                bool ok = cr.passed() == cr.entries.size();
                if (!no_delegates) ok = ok && cr.ok();
                r.verdict = of(ok);
            });
        };
    });

    // classify
    WeightInput cls_w;
    auto* cls = app.add_subcommand("classify", "which of the seven cases a weight vector falls in");
    cls_w.attach(cls);
    cls->callback([&] {
        run = [&] {
            Report rep{"classify"};
            return finish(rep, [&](Report& r) {
                WeightVector w = cls_w.get();
                r.inputs["weights"] = weights_json(w);
                auto l = classify_case(w);
                r.details = {{"case", l.index}, {"description", l.description},
                             {"predicates", {{"a1", l.a1}, {"a1+a2", l.a12}, {"a1+a2+a3", l.a123}}}};
                std::cout << "case " << l.index << ": " << l.description << '\n';
                r.verdict = Verdict::verified;
            });
        };
    });

    // verify-case
    WeightInput vc_w;
    std::string vc_batch;
    int vc_force = 0;
    auto* vc = app.add_subcommand("verify-case", "run the chain of inequalities for the instance's case");
    vc_w.attach(vc);
    vc->add_option("--batch", vc_batch, "file with one comma-separated weight vector per line");
    vc->add_option("--force-case", vc_force, "run this case's chain instead")->check(CLI::Range(1, 7));
    vc->callback([&] {
        run = [&] {
            Report rep{"verify-case"};
            return finish(rep, [&](Report& r) {
                CaseOptions opt;
                opt.force_case = vc_force;
                std::vector<WeightVector> ws;
                if (!vc_batch.empty()) {
                    if (!vc_w.file.empty() || !vc_w.list.empty()) throw UsageError("--batch excludes --weights/--list");
                    std::ifstream in(vc_batch);
                    if (!in) throw ParseError("cannot open '" + vc_batch + "'");
                    std::string line;
                    while (std::getline(in, line)) {
                        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
                        if (detail::trim(line).empty()) continue;
                        WeightInput wi;
                        wi.list = line;
                        ws.push_back(wi.get());
                    }
                } else {
                    ws.push_back(vc_w.get());
                }
                for (const auto& w : ws)
                    if (w.n() > opt.max_n) throw DimensionTooLarge("case pipelines need n <= 20");
                auto reps = run_case_batch(ws, G.jobs, opt);
                json all = json::array();
                bool ok = true;
                for (const auto& cr : reps) {
                    all.push_back(case_report_json(cr));
                    ok = ok && cr.verdict;
                    std::cout << cr.instance << ": case " << cr.label.index << " (" << cr.subcase << ") "
                              << (cr.verdict ? "passes" : "fails");
                    if (auto f = cr.first_failure()) std::cout << " at step " << f->id;
                    std::cout << '\n';
                }
                r.inputs = {{"instances", ws.size()}, {"force_case", vc_force}};
                r.details = {{"reports", all}};
                r.verdict = of(ok);
            });
        };
    });

    // t5-bounds
    std::string t5_list;
    auto* t5 = app.add_subcommand("t5-bounds", "lower bounds on the 32 thresholds of the five-weight elimination");
    t5->add_option("-a,--a", t5_list, "five normalized weights a1..a5")->required();
    t5->callback([&] {
        run = [&] {
            Report rep{"t5-bounds"};
            return finish(rep, [&](Report& r) {
                std::array<Rational, 5> a;
                std::stringstream ss(t5_list);
                std::string tok;
                std::size_t k = 0;
                while (std::getline(ss, tok, ',')) {
                    if (k >= 5) throw UsageError("need exactly five weights");
                    a[k++] = num(std::string(detail::trim(tok)));
                }
                if (k != 5) throw UsageError("need exactly five weights");
                json in = json::array();
                for (const auto& x : a) in.push_back(jq(x));
                r.inputs["a"] = in;
                auto t = check_T5_bounds(a);
                json checks = json::array();
                for (const auto& c : t.checks) {
                    checks.push_back({{"label", c.label}, {"value", jsurd(c.value)}, {"bound", jsurd(c.bound)}, {"holds", c.holds}});
                    if (!c.holds) std::cout << "FAIL " << c.label << '\n';
                }
                r.details = {{"checks", checks}, {"sigma_sq", jq(t.sigma_sq)}};
                r.verdict = of(t.ok());
            });
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    set_jobs(G.jobs);
    if (!run) return 2;
    return run();
}
