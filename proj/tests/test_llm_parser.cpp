// SPDX-License-Identifier: Apache-2.0
//
// stcm - semantics-conditioned ISAC channel simulator
// Copyright (C) 2026 The stcm authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "stcm/llm_parser.hpp"

#include <gtest/gtest.h>

#include <deque>
#include <fstream>
#include <mutex>
#include <thread>

using namespace stcm;

namespace {

const std::string kValidDoc =
    R"({"scene_id": "s1", "scenario_class": "highway",
        "targets": [{"id": "car", "class": "vehicle", "components": [{"part": "wheel", "count": 4, "rotation_hz": 9}],
                     "position": [30, 0, 0], "velocity": [-20, 0, 0]}]})";

/// In-process OpenAI-compatible endpoint replaying scripted replies.
class MockEndpoint
{
public:
    MockEndpoint()
    {
        server_.Post("/v1/chat/completions", [this](const httplib::Request &req, httplib::Response &res) {
            std::lock_guard lock(mu_);
            requests_.push_back(req.body);
            auth_.push_back(req.get_header_value("Authorization"));
            if (replies_.empty())
            {
                res.status = 500;
                return;
            }
            auto [status, content] = replies_.front();
            replies_.pop_front();
            res.status = status;
            nlohmann::json body{{"id", "mock"},
                                {"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}}}}};
            res.set_content(body.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~MockEndpoint()
    {
        server_.stop();
        thread_.join();
    }

    void reply(std::string content, int status = 200) { replies_.emplace_back(status, std::move(content)); }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
    std::vector<std::string> requests() const
    {
        std::lock_guard lock(mu_);
        return requests_;
    }
    std::vector<std::string> auth() const
    {
        std::lock_guard lock(mu_);
        return auth_;
    }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    mutable std::mutex mu_;
    std::deque<std::pair<int, std::string>> replies_;
    std::vector<std::string> requests_, auth_;
};

LlmEndpointConfig config_for(const MockEndpoint &m)
{
    LlmEndpointConfig c;
    c.base_url = m.url();
    c.model_name = "mock-model";
    c.timeout = 5.0;
    return c;
}

} // namespace

TEST(SystemPrompt, NamesLevelsAndFields)
{
    const std::string &p = build_system_prompt();
    EXPECT_NE(p.find("\"scenario_class\""), std::string::npos);
    for (const char *level : {"component level", "object level", "scene level", "intent level"})
        EXPECT_NE(p.find(level), std::string::npos) << level;
    for (const char *field : {"\"targets\"", "\"background\"", "\"relations\"", "\"events\"", "\"material_class\"",
                              "\"acts_as_occluder\"", "\"rotation_hz\"", "\"participants\""})
        EXPECT_NE(p.find(field), std::string::npos) << field;
}

TEST(SystemPrompt, StableAndMatchesGolden)
{
    EXPECT_EQ(build_system_prompt(), build_system_prompt());
    std::ifstream is(std::string(STCM_TEST_DATA) + "/system_prompt.golden", std::ios::binary);
    ASSERT_TRUE(is) << "missing golden file";
    const std::string golden{std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
    EXPECT_EQ(build_system_prompt(), golden);
}

TEST(FirstJsonObject, SkipsProseAndStringBraces)
{
    EXPECT_EQ(first_json_object("Sure! ```json\n{\"a\": \"}{\", \"b\": {\"c\": 1}}\n``` done"),
              std::optional<std::string>(R"({"a": "}{", "b": {"c": 1}})"));
    EXPECT_FALSE(first_json_object("no document here").has_value());
    EXPECT_FALSE(first_json_object("{ unterminated").has_value());
}

TEST(ParseText, ValidReply)
{
    MockEndpoint mock;
    mock.reply("Here is the scene:\n" + kValidDoc);
    const ParseOutcome out = parse_text("a car on a highway", config_for(mock));
    EXPECT_EQ(out.retries, 0);
    EXPECT_EQ(out.scene, validate_scene(kValidDoc));
    const auto req = nlohmann::json::parse(mock.requests().at(0));
    EXPECT_EQ(req["model"], "mock-model");
    EXPECT_EQ(req["messages"][0]["role"], "system");
    EXPECT_EQ(req["messages"][0]["content"], build_system_prompt());
    EXPECT_EQ(req["messages"][1]["content"], "a car on a highway");
}

TEST(ParseText, RetriesWithValidatorMessage)
{
    MockEndpoint mock;
    mock.reply("I cannot help with that");
    mock.reply(R"({"scenario_class": "highway", "targets": [{"id": "x", "class": "tank", "components": []}]})");
    mock.reply(kValidDoc);
    LlmEndpointConfig cfg = config_for(mock);
    cfg.max_retries = 2;
    const ParseOutcome out = parse_text("a car", cfg);
    EXPECT_EQ(out.retries, 2);
    EXPECT_EQ(out.scene.scene_id, "s1");
    const auto reqs = mock.requests();
    ASSERT_EQ(reqs.size(), 3u);
    const auto third = nlohmann::json::parse(reqs[2]);
    const std::string last = third["messages"].back()["content"];
    EXPECT_NE(last.find("$.targets[0].class"), std::string::npos) << last;
}

TEST(ParseText, ExhaustedCarriesLastError)
{
    MockEndpoint mock;
    mock.reply(R"({"scenario_class": "highway"})");
    mock.reply(R"({"scenario_class": "highway"})");
    LlmEndpointConfig cfg = config_for(mock);
    cfg.max_retries = 1;
    try
    {
        parse_text("nothing", cfg);
        FAIL() << "expected ParseExhausted";
    }
    catch (const ParseExhausted &e)
    {
        EXPECT_NE(std::string(e.what()).find("last validator error"), std::string::npos);
    }
    EXPECT_EQ(mock.requests().size(), 2u);
}

TEST(ParseText, OfflineWithoutEndpoint)
{
    EXPECT_THROW(parse_text("x", LlmEndpointConfig{}), OfflineMode);
}

TEST(ParseText, TransportErrors)
{
    {
        MockEndpoint mock;
        mock.reply("", 503);
        EXPECT_THROW(parse_text("x", config_for(mock)), TransportError);
    }
    LlmEndpointConfig cfg;
    cfg.base_url = "http://127.0.0.1:1/v1";
    cfg.timeout = 2.0;
    EXPECT_THROW(parse_text("x", cfg), TransportError);
}

TEST(ParseText, ApiKeyIsSentButNeverLogged)
{
    MockEndpoint mock;
    mock.reply("not json");
    mock.reply(kValidDoc);
    LlmEndpointConfig cfg = config_for(mock);
    cfg.api_key = "sk-test-SECRET-0123456789";
    std::vector<std::string> log;
    parse_text("the key sk-test-SECRET-0123456789 must not leak", cfg,
               [&](std::string_view line) { log.emplace_back(line); });
    ASSERT_FALSE(log.empty());
    for (const auto &line : log)
        EXPECT_EQ(line.find(cfg.api_key), std::string::npos) << line;
    for (const auto &body : mock.requests())
        EXPECT_EQ(nlohmann::json::parse(body).dump().find("\"api_key\""), std::string::npos);
    for (const auto &h : mock.auth())
        EXPECT_EQ(h, "Bearer " + cfg.api_key);
}

TEST(LlmEndpointConfig, Validation)
{
    LlmEndpointConfig c;
    c.timeout = 0.0;
    EXPECT_THROW(c.validate(), SchemaError);
    c.timeout = 1.0;
    c.temperature = 2.5;
    EXPECT_THROW(c.validate(), SchemaError);
    c.temperature = 2.0;
    EXPECT_NO_THROW(c.validate());
}
