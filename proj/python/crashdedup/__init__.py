# Copyright 2026 The crashdedup Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Group fuzzer crashes by root cause."""

from ._core import (
    CorpusError,
    DegenerateVectorError,
    Error,
    IdMismatchError,
    ProtocolError,
    ProviderError,
    __version__,
    cluster,
    combine_sources,
    dbcv,
    evaluate,
    offline_embed,
    parse_trace,
    prepare,
    run,
)

__all__ = [
    "CorpusError",
    "DegenerateVectorError",
    "Error",
    "IdMismatchError",
    "ProtocolError",
    "ProviderError",
    "__version__",
    "cluster",
    "combine_sources",
    "dbcv",
    "evaluate",
    "offline_embed",
    "parse_trace",
    "prepare",
    "run",
]
