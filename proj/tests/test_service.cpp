#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "symscreen/error.hpp"
#include "symscreen/eval.hpp"
#include "symscreen/service.hpp"
#include "symscreen/synth.hpp"

using namespace symscreen;
using namespace std::chrono_literals;
namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

struct Workspace {
  fs::path root;
  fs::path corpus_dir;
  fs::path data_dir;
  SynthResult synth;

  explicit Workspace(const std::string& name) {
    root = fs::temp_directory_path() / ("symscreen_svc_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(root);
    corpus_dir = root / "corpus";
    data_dir = root / "data";
    SynthSpec spec = SynthSpec::uniform(0.3);
    spec.n_cases = 3;
    spec.n_controls = 3;
    spec.min_notes = 2;
    spec.max_notes = 3;
    synth = synthesize(spec);
    write_corpus(synth.corpus, corpus_dir);
  }
  ~Workspace() { fs::remove_all(root); }

  ServiceConfig config() const {
    ServiceConfig c;
    c.data_dir = data_dir;
    c.corpora["syn"] = corpus_dir;
    return c;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run finished_run(Service& svc, const std::string& backend = "mock") {
  const Run r = svc.start_run(backend, "syn");
  REQUIRE(svc.wait_idle(30s));
  return svc.get_run(r.run_id);
}

const Detection& first_where(const std::vector<Detection>& ds, bool present) {
  for (const auto& d : ds) {
    if (d.present == present) return d;
  }
  FAIL("no detection with the requested verdict");
  return ds.front();
}

AdjudicationRequest request(const Detection& d, Verdict v, std::string reviewer = "dr_a") {
  AdjudicationRequest r;
  r.note_id = d.note_id;
  r.category_id = d.category_id;
  r.verdict = v;
  r.reviewer = std::move(reviewer);
  return r;
}

}  // namespace

TEST_CASE("run lifecycle") {
  Workspace ws("lifecycle");
  Service svc(ws.config());
  CHECK_THROWS_AS(svc.start_run("nosuch", "syn"), NotFoundError);
  CHECK_THROWS_AS(svc.start_run("mock", "nosuch"), NotFoundError);
  CHECK_THROWS_AS(svc.start_run("mock", "syn", {"nosuch"}), NotFoundError);
  CHECK(svc.runs().empty());

  const Run started = svc.start_run("mock", "syn");
  CHECK(started.run_id == "R000001");
  CHECK((started.state == RunState::pending || started.state == RunState::running));
  REQUIRE(svc.wait_idle(30s));
  const Run done = svc.get_run(started.run_id);
  CHECK(done.state == RunState::done);
  const std::size_t total = ws.synth.corpus.notes().size() * 16;
  CHECK(done.total_pairs == total);
  CHECK(done.done_pairs == total);
  CHECK(done.finished_at);
  CHECK_THROWS_AS(svc.get_run("R999999"), NotFoundError);

  const auto dets = svc.detections(done.run_id);
  CHECK(dets.size() == total);
  const Run again = finished_run(svc);
  CHECK(again.run_id == "R000002");
  CHECK(detections_to_jsonl(svc.detections(again.run_id)) == detections_to_jsonl(dets));
  CHECK(fs::exists(ws.data_dir / "detections" / "R000001.jsonl"));

  const Run subset = svc.start_run("keyword", "syn", {"sleep_problems"});
  REQUIRE(svc.wait_idle(30s));
  CHECK(svc.detections(subset.run_id).size() == ws.synth.corpus.notes().size());
  CHECK(svc.metrics()["runs"]["done"] == 3);
}

TEST_CASE("review queue filters") {
  Workspace ws("review");
  Service svc(ws.config());
  const Run run = finished_run(svc);
  const auto dets = svc.detections(run.run_id);
  const auto all = svc.review_queue(run.run_id, {});
  CHECK(all.size() == dets.size());
  const auto positive = svc.review_queue(run.run_id, {std::nullopt, true, false});
  const auto n_positive = std::count_if(dets.begin(), dets.end(), [](const Detection& d) { return d.present; });
  CHECK(positive.size() == static_cast<std::size_t>(n_positive));
  for (const auto& item : positive) {
    CHECK(item.detection.present);
    CHECK(item.note_text == ws.synth.corpus.find_note(item.detection.note_id)->text);
  }
  const auto sleep = svc.review_queue(run.run_id, {std::string("sleep_problems"), false, false});
  CHECK(sleep.size() == ws.synth.corpus.notes().size());

  const auto before = svc.review_queue(run.run_id, {std::nullopt, false, true}).size();
  (void)svc.adjudicate(request(dets[0], Verdict::accept));
  CHECK(svc.review_queue(run.run_id, {std::nullopt, false, true}).size() == before - 1);

  const Json j = to_json(positive.front());
  REQUIRE(j["highlights"].size() >= 1);
  const auto& h = j["highlights"][0];
  const std::string text = j["note_text"];
  CHECK(h["end"].get<std::size_t>() <= text.size());
  CHECK(h["label"] == Taxonomy::canonical().at(positive.front().detection.category_id).display_name);
}

TEST_CASE("adjudication rules and gold projection") {
  Workspace ws("adjudicate");
  Service svc(ws.config());
  const Run run = finished_run(svc);
  const auto dets = svc.detections(run.run_id);
  CHECK(svc.project_gold(run.run_id).empty());

  const Detection& pos = first_where(dets, true);
  const Detection& neg = first_where(dets, false);

  auto a = svc.adjudicate(request(pos, Verdict::accept));
  CHECK(a.created);
  CHECK(a.adjudication.adjudication_id == "A000001");
  CHECK(a.adjudication.run_id == run.run_id);
  (void)svc.adjudicate(request(neg, Verdict::accept));
  auto gold = svc.project_gold(run.run_id);
  REQUIRE(gold.size() == 2);

  const auto find = [&](const Detection& d) {
    for (const auto& g : svc.project_gold(run.run_id)) {
      if (g.note_id == d.note_id && g.category_id == d.category_id) return std::optional<GoldLabel>(g);
    }
    return std::optional<GoldLabel>();
  };
  CHECK(find(pos)->present);
  REQUIRE(find(pos)->evidence.size() == pos.evidence.size());
  CHECK(find(pos)->evidence[0].start == *pos.evidence[0].start);
  CHECK_FALSE(find(neg)->present);

  // Projected gold scored against the same detections: accepted pairs agree.
  const auto report = score(svc.project_gold(run.run_id), dets);
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  for (const auto& row : report.rows) {
    tp += row.tp;
    tn += row.tn;
    fp += row.fp;
    fn += row.fn;
  }
  CHECK(tp == 1);
  CHECK(tn == 1);
  CHECK(fp + fn == 0);

  (void)svc.adjudicate(request(pos, Verdict::reject));
  CHECK_FALSE(find(pos)->present);
  CHECK(find(pos)->evidence.empty());

  auto modify = request(neg, Verdict::modify);
  CHECK_THROWS_AS(svc.adjudicate(modify), ValidationError);
  modify.corrected_evidence = std::vector<Span>{};
  CHECK_THROWS_AS(svc.adjudicate(modify), ValidationError);
  const std::size_t len = ws.synth.corpus.find_note(neg.note_id)->text.size();
  modify.corrected_evidence = std::vector<Span>{{0, len + 1}};
  CHECK_THROWS_AS(svc.adjudicate(modify), ValidationError);
  modify.corrected_evidence = std::vector<Span>{{5, 5}};
  CHECK_THROWS_AS(svc.adjudicate(modify), ValidationError);
  modify.corrected_evidence = std::vector<Span>{{0, 4}};
  (void)svc.adjudicate(modify);
  CHECK(find(neg)->present);
  CHECK(find(neg)->evidence == std::vector<Span>{{0, 4}});

  auto anonymous = request(pos, Verdict::accept, "");
  CHECK_THROWS_AS(svc.adjudicate(anonymous), ValidationError);
  Detection ghost = pos;
  ghost.note_id = "nosuch";
  CHECK_THROWS_AS(svc.adjudicate(request(ghost, Verdict::accept)), NotFoundError);
  auto wrong_run = request(pos, Verdict::accept);
  wrong_run.run_id = "R000404";
  CHECK_THROWS_AS(svc.adjudicate(wrong_run), NotFoundError);

  const auto merged = svc.project_gold(run.run_id, true);
  CHECK(merged.size() == ws.synth.corpus.gold().size());
}

TEST_CASE("idempotency keys") {
  Workspace ws("idempotent");
  Service svc(ws.config());
  const Run run = finished_run(svc);
  const auto dets = svc.detections(run.run_id);
  const auto req = request(dets[0], Verdict::accept);
  const auto first = svc.adjudicate(req, std::string("key-1"));
  const auto replay = svc.adjudicate(req, std::string("key-1"));
  CHECK(first.created);
  CHECK_FALSE(replay.created);
  CHECK(replay.adjudication == first.adjudication);
  CHECK(svc.metrics()["adjudications"] == 1);
  CHECK(svc.metrics()["idempotent_replays"] == 1);
  CHECK_THROWS_AS(svc.adjudicate(request(dets[0], Verdict::reject), std::string("key-1")), ConflictError);
}

TEST_CASE("reviewers supersede themselves; disagreements surface as conflicts") {
  Workspace ws("conflicts");
  Service svc(ws.config());
  const Run run = finished_run(svc);
  const Detection pos = first_where(svc.detections(run.run_id), true);

  (void)svc.adjudicate(request(pos, Verdict::reject, "dr_a"));
  (void)svc.adjudicate(request(pos, Verdict::accept, "dr_a"));
  CHECK(svc.conflicts(run.run_id).empty());
  CHECK(svc.metrics()["live_adjudications"] == 1);

  (void)svc.adjudicate(request(pos, Verdict::reject, "dr_b"));
  const auto conflicts = svc.conflicts(run.run_id);
  REQUIRE(conflicts.size() == 1);
  CHECK(conflicts[0].adjudications.size() == 2);
  const auto gold = svc.project_gold(run.run_id);
  REQUIRE(gold.size() == 1);
  CHECK_FALSE(gold[0].present);
}

TEST_CASE("replay after restart reproduces projections") {
  Workspace ws("replay");
  std::string before;
  std::string run_id;
  {
    Service svc(ws.config());
    const Run run = finished_run(svc);
    run_id = run.run_id;
    const auto dets = svc.detections(run_id);
    (void)svc.adjudicate(request(dets[0], Verdict::accept));
    (void)svc.adjudicate(request(dets[1], Verdict::reject), std::string("k"));
    (void)svc.adjudicate(request(first_where(dets, true), Verdict::reject, "dr_b"));
    before = gold_to_jsonl(svc.project_gold(run_id));
  }
  {
    std::ofstream torn(ws.data_dir / "adjudications.log", std::ios::app | std::ios::binary);
    torn << R"({"adjudication":{"adjudication_id":"A0)";
  }
  {
    Service svc(ws.config());
    CHECK(gold_to_jsonl(svc.project_gold(run_id)) == before);
    CHECK(svc.get_run(run_id).state == RunState::done);
    CHECK_FALSE(svc.adjudicate(request(svc.detections(run_id)[1], Verdict::reject), std::string("k")).created);
    const auto next = svc.adjudicate(request(svc.detections(run_id)[2], Verdict::accept));
    CHECK(next.adjudication.adjudication_id == "A000004");
    (void)svc.adjudicate(request(svc.detections(run_id)[2], Verdict::reject));
    before = gold_to_jsonl(svc.project_gold(run_id));
  }
  std::size_t live = 0;
  {
    Service svc(ws.config());
    CHECK(gold_to_jsonl(svc.project_gold(run_id)) == before);
    CHECK(svc.metrics()["adjudications"] == 5);
    live = svc.metrics()["live_adjudications"].get<std::size_t>();
  }
  compact(ws.data_dir);
  {
    Service svc(ws.config());
    CHECK(gold_to_jsonl(svc.project_gold(run_id)) == before);
    CHECK(svc.metrics()["adjudications"] == live);
    CHECK(live < 5);
    CHECK_FALSE(svc.adjudicate(request(svc.detections(run_id)[1], Verdict::reject), std::string("k")).created);
  }
}

TEST_CASE("interrupted runs fail and pending runs resume") {
  Workspace ws("interrupted");
  fs::create_directories(ws.data_dir);
  Run running{"R000001", "mock", "syn", {}, RunState::running, "2026-01-01T00:00:00Z", std::nullopt, 3, 10, ""};
  Run pending{"R000002", "mock", "syn", {}, RunState::pending, "2026-01-01T00:00:01Z", std::nullopt, 0, 0, ""};
  {
    std::ofstream log(ws.data_dir / "runs.log", std::ios::binary);
    log << to_json(running).dump() << "\n" << to_json(pending).dump() << "\n";
  }
  Service svc(ws.config());
  REQUIRE(svc.wait_idle(30s));
  const Run failed = svc.get_run("R000001");
  CHECK(failed.state == RunState::failed);
  CHECK_FALSE(failed.error.empty());
  CHECK_THROWS_AS(svc.detections("R000001"), ConflictError);
  CHECK(svc.get_run("R000002").state == RunState::done);
  CHECK(svc.start_run("mock", "syn").run_id == "R000003");
  REQUIRE(svc.wait_idle(30s));
}

TEST_CASE("patient vectors") {
  Workspace ws("vector");
  Service svc(ws.config());
  const Run run = finished_run(svc);
  const auto& p = ws.synth.corpus.patients().front();
  const auto v = svc.patient_vector(p.patient_id);
  CHECK(v.values.size() == 16);
  CHECK(v.n_notes == ws.synth.corpus.notes_of(p.patient_id).size());
  CHECK(svc.patient_vector(p.patient_id, run.run_id) == v);
  CHECK_THROWS_AS(svc.patient_vector("nosuch"), NotFoundError);
}

TEST_CASE("config parsing") {
  const auto cfg = service_config_from_json(Json::parse(R"({"port": 9000, "data_dir": "/tmp/x",
      "corpora": {"a": "/tmp/a"}, "token": "t",
      "backends": [{"backend_id": "m", "kind": "mock"}]})"));
  CHECK(cfg.port == 9000);
  CHECK(cfg.host == "127.0.0.1");
  CHECK(cfg.corpora.at("a") == "/tmp/a");
  REQUIRE(cfg.backends.size() == 1);
  ServiceConfig dup;
  dup.backends.push_back(dup.backends.front());
  CHECK_THROWS_AS(dup.validate(), ValidationError);
}

namespace {

struct LiveServer {
  HttpServer http;
  std::thread thread;
  int port = 0;

  explicit LiveServer(Service& svc) : http(svc) {
    std::promise<int> bound;
    auto ready = bound.get_future();
    thread = std::thread([&] { http.run("127.0.0.1", 0, [&](int p) { bound.set_value(p); }); });
    port = ready.get();
  }
  ~LiveServer() {
    http.stop();
    thread.join();
  }
};

}  // namespace

TEST_CASE("http api") {
  Workspace ws("http");
  fs::create_directories(ws.root / "ui");
  std::ofstream(ws.root / "ui" / "index.html") << "<html>review</html>";
  ServiceConfig cfg = ws.config();
  cfg.token = "s3cret";
  cfg.ui_dir = ws.root / "ui";
  Service svc(cfg);
  LiveServer server(svc);

  httplib::Client anon("127.0.0.1", server.port);
  CHECK(anon.Get("/api/metrics")->status == 401);
  const auto page = anon.Get("/index.html");
  REQUIRE(page);
  CHECK(page->status == 200);
  CHECK(page->body == "<html>review</html>");

  httplib::Client c("127.0.0.1", server.port);
  c.set_bearer_token_auth("s3cret");

  auto res = c.Post("/api/runs", R"({"backend_id":"nosuch","corpus_ref":"syn"})", "application/json");
  CHECK(res->status == 404);
  res = c.Post("/api/runs", "{not json", "application/json");
  CHECK(res->status == 400);
  res = c.Post("/api/runs", R"({"backend_id":"mock","corpus_ref":"syn"})", "application/json");
  REQUIRE(res->status == 201);
  const std::string run_id = Json::parse(res->body)["run_id"];
  REQUIRE(svc.wait_idle(30s));

  res = c.Get("/api/runs/" + run_id);
  const Json run = Json::parse(res->body);
  CHECK(run["state"] == "done");
  CHECK(run["progress"]["done"] == run["progress"]["total"]);
  CHECK(c.Get("/api/runs/R999999")->status == 404);
  CHECK(Json::parse(c.Get("/api/runs")->body).size() == 1);

  const Json dets = Json::parse(c.Get("/api/runs/" + run_id + "/detections")->body);
  CHECK(dets.size() == ws.synth.corpus.notes().size() * 16);

  const Json queue = Json::parse(c.Get("/api/runs/" + run_id + "/review?only_positive=true")->body);
  REQUIRE(queue.size() > 0);
  const Json item = queue[0];
  CHECK(item["detection"]["present"] == true);

  const std::string note_text = item["note_text"];
  const std::string note_id = item["detection"]["note_id"];
  const std::string category = item["detection"]["category_id"];
  // Select the first sentence's leading bytes as corrected evidence.
  const std::size_t end = std::min<std::size_t>(note_text.find('.'), 20);
  Json body{{"note_id", note_id}, {"category_id", category}, {"verdict", "modify"},
            {"corrected_evidence", Json::array({Json{{"start", 0}, {"end", end}}})}, {"reviewer", "dr_a"}};
  httplib::Headers keyed{{"Idempotency-Key", "abc"}};
  res = c.Post("/api/adjudications", keyed, body.dump(), "application/json");
  CHECK(res->status == 201);
  res = c.Post("/api/adjudications", keyed, body.dump(), "application/json");
  CHECK(res->status == 200);
  Json missing = body;
  missing.erase("corrected_evidence");
  CHECK(c.Post("/api/adjudications", missing.dump(), "application/json")->status == 400);
  Json changed = body;
  changed["verdict"] = "reject";
  CHECK(c.Post("/api/adjudications", keyed, changed.dump(), "application/json")->status == 409);

  res = c.Get("/api/runs/" + run_id + "/gold");
  CHECK(res->status == 200);
  const Json gold = Json::parse(res->body.substr(0, res->body.find('\n')));
  CHECK(gold["present"] == true);
  const auto start = gold["evidence"][0]["start"].get<std::size_t>();
  const auto stop = gold["evidence"][0]["end"].get<std::size_t>();
  CHECK(note_text.substr(start, stop - start) == note_text.substr(0, end));
  CHECK(std::count(res->body.begin(), res->body.end(), '\n') == 1);

  const Json unreviewed = Json::parse(c.Get("/api/runs/" + run_id + "/review?only_positive=1&unreviewed_only=1")->body);
  CHECK(unreviewed.size() == queue.size() - 1);

  const std::string pid = ws.synth.corpus.patients()[0].patient_id;
  const Json vec = Json::parse(c.Get("/api/patients/" + pid + "/vector")->body);
  CHECK(vec["values"].size() == 16);
  CHECK(c.Get("/api/patients/nosuch/vector")->status == 404);
  CHECK(Json::parse(c.Get("/api/runs/" + run_id + "/conflicts")->body).empty());

  const Json metrics = Json::parse(c.Get("/api/metrics")->body);
  CHECK(metrics["adjudications"] == 1);
  CHECK(metrics["requests"].get<int>() >= 10);
}
