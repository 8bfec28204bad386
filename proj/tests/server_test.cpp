#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cuebuddy/server.hpp"
#include "ws_client.hpp"

using namespace cuebuddy;
using test_client::WebSocket;
namespace http = boost::beast::http;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class ServerFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    registry.add_glossary(
        compile_glossary(load_glossary_file(std::string(CUEBUDDY_DATA_DIR) + "/lecture_glossary.jsonl")),
        "default");
    server = std::make_unique<server::Server>(registry, "127.0.0.1", 0);
    server->start();
    port = server->port();
  }
  void TearDown() override { server->stop(); }

  std::string new_session(const std::string& body = "") {
    auto r = test_client::request(port, http::verb::post, "/sessions", body);
    EXPECT_EQ(r.status, 201u);
    return r.body["session_id"].get<std::string>();
  }

  SessionRegistry registry;
  std::unique_ptr<server::Server> server;
  unsigned short port = 0;
};

}  // namespace

TEST_F(ServerFixture, HttpEndpoints) {
  auto up = test_client::request(port, http::verb::post, "/glossaries",
                                 read_file(std::string(CUEBUDDY_DATA_DIR) + "/ml_glossary.jsonl"));
  EXPECT_EQ(up.status, 201u);
  const auto version = up.body["version"].get<std::string>();
  EXPECT_EQ(version.size(), 16u);

  auto bad = test_client::request(port, http::verb::post, "/glossaries",
                                  R"({"term":"x","explanations":{"zz-!!":"y"}})");
  EXPECT_EQ(bad.status, 400u);
  EXPECT_EQ(bad.body["error"], "InvalidGlossary");

  auto id = new_session(R"({"glossary":")" + version + R"(","mode":"eager","cooldown_ms":5})");
  auto status = test_client::request(port, http::verb::get, "/sessions/" + id);
  EXPECT_EQ(status.status, 200u);
  EXPECT_EQ(status.body["glossary_version"], version);
  EXPECT_EQ(status.body["mode"], "eager");
  EXPECT_EQ(status.body["cooldown_ms"], 5);

  EXPECT_EQ(test_client::request(port, http::verb::post, "/sessions", R"({"glossary":"nope"})").status,
            404u);
  EXPECT_EQ(test_client::request(port, http::verb::post, "/sessions", R"({"cooldown_ms":-1})")
                .body["error"],
            "InvalidConfig");
  EXPECT_EQ(test_client::request(port, http::verb::get, "/sessions/s404").status, 404u);
  EXPECT_EQ(test_client::request(port, http::verb::get, "/nowhere").status, 404u);
}

TEST_F(ServerFixture, IngestAndSubscribe) {
  auto id = new_session();
  WebSocket hi(port, "/sessions/" + id + "/subscribe");
  hi.send_json(nlohmann::json{{"type", "hello"}, {"lang", "hi"}, {"resume_from", nullptr}});
  EXPECT_EQ(hi.receive()["type"], "welcome");
  WebSocket sw(port, "/sessions/" + id + "/subscribe");
  sw.send_json(nlohmann::json{{"type", "hello"}, {"lang", "sw"}});
  EXPECT_EQ(sw.receive()["type"], "welcome");

  WebSocket ingest(port, "/sessions/" + id + "/ingest");
  ingest.send("0\t3000\tfinal\t1\t0\tthe neural network uses backpropagation\n");
  auto ack = ingest.receive();
  EXPECT_EQ(ack["type"], "ack");
  EXPECT_EQ(ack["cues"], 2);

  auto a = hi.receive();
  auto b = hi.receive();
  EXPECT_EQ(a["canonical"], "neural network");
  EXPECT_EQ(b["canonical"], "backpropagation");
  EXPECT_EQ(b["lang_used"], "hi");
  EXPECT_EQ(b["fallback"], "none");
  EXPECT_EQ(b["explanation"].get<std::string>().rfind("ek algorithm hai jo", 0), 0u);
  sw.receive();
  EXPECT_EQ(sw.receive()["explanation"].get<std::string>().rfind("ni mbinu ya kufundisha", 0), 0u);

  ingest.send("garbage");
  EXPECT_EQ(ingest.receive()["error"], "MalformedLine");
}

TEST_F(ServerFixture, SecondIngestGets409) {
  auto id = new_session();
  WebSocket first(port, "/sessions/" + id + "/ingest");
  auto [status, body] = test_client::try_upgrade(port, "/sessions/" + id + "/ingest");
  EXPECT_EQ(status, 409u);
  EXPECT_NE(body.find("SecondIngestRejected"), std::string::npos);
  first.close();
  // The lease is released once the first connection is gone.
  for (int i = 0; i < 100 && status != 101; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
    status = test_client::try_upgrade(port, "/sessions/" + id + "/ingest").first;
  }
  EXPECT_EQ(status, 101u);
  EXPECT_EQ(test_client::try_upgrade(port, "/sessions/s404/subscribe").first, 404u);
}

TEST_F(ServerFixture, SuppressAndResume) {
  auto id = new_session(R"({"cooldown_ms":0})");
  WebSocket sub(port, "/sessions/" + id + "/subscribe");
  sub.send(R"({"type":"suppress","term_id":0})");
  EXPECT_EQ(sub.receive()["error"], "BadMessage");
  sub.send(R"({"type":"hello","lang":"en"})");
  auto welcome = sub.receive();
  sub.send(R"({"type":"suppress","term_id":0})");
  auto s1 = sub.receive();
  EXPECT_EQ(s1["type"], "suppressed");
  EXPECT_EQ(s1["added"], true);
  sub.send(R"({"type":"suppress","term_id":0})");
  EXPECT_EQ(sub.receive()["added"], false);
  sub.send(R"({"type":"suppress","term_id":9})");
  EXPECT_EQ(sub.receive()["error"], "UnknownTerm");

  WebSocket ingest(port, "/sessions/" + id + "/ingest");
  ingest.send("0\t1000\tfinal\t1\t0\tbackpropagation in a neural network\n"
              "2000\t3000\tfinal\t2\t0\tneural network\n");
  EXPECT_EQ(ingest.receive()["cues"], 2);
  EXPECT_EQ(ingest.receive()["cues"], 1);
  auto c = sub.receive();
  EXPECT_EQ(c["term_id"], 1);
  EXPECT_EQ(c["cue_id"], 2);
  EXPECT_EQ(sub.receive()["cue_id"], 3);
  sub.close();

  WebSocket again(port, "/sessions/" + id + "/subscribe");
  again.send(R"({"type":"hello","lang":"sw","resume_from":1})");
  EXPECT_EQ(again.receive()["type"], "welcome");
  EXPECT_EQ(again.receive()["cue_id"], 2);
  EXPECT_EQ(again.receive()["cue_id"], 3);

  WebSocket bad(port, "/sessions/" + id + "/subscribe");
  bad.send(R"({"type":"hello","lang":"zz-!!"})");
  EXPECT_EQ(bad.receive()["error"], "InvalidLanguage");
}
