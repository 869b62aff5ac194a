"""
Extract structured metadata from the model cards of ingested PTMs.

Besides the PTM metadata, PTM-PTM dependencies are derived from the extracted base models.
With --truth, extraction accuracy against manually labeled ground truth is reported.
"""
import json

from clldutils.clilib import ParserError, PathType

from ptmchain.cards import pipeline
from ptmchain.cards.clients import DEFAULT_API_KEY_ENV, get_client
from ptmchain.cards.retrieval import TermOverlapScorer, WhooshScorer
from ptmchain.cards.evaluation import evaluate_accuracy
from ptmchain.cards.lineage import derive_ptm_ptm_links
from ptmchain.cli_util import add_db, get_store, add_jobs

SCORERS = {'overlap': TermOverlapScorer, 'bm25f': WhooshScorer}


def register(parser):
    add_db(parser)
    parser.add_argument(
        '--mode',
        choices=[pipeline.CHEAP, pipeline.ACCURATE],
        default=pipeline.CHEAP,
    )
    parser.add_argument(
        '--client',
        help="Completion client: 'mock' (scripted with --script, echo otherwise), 'empty' or "
             "'live'",
        choices=['mock', 'empty', 'live'],
        default='mock',
    )
    parser.add_argument(
        '--script',
        metavar='SCRIPT',
        help='Scripted responses (JSON) for the mock client',
        type=PathType(type='file'),
        default=None,
    )
    parser.add_argument(
        '--budget',
        help='Token budget per request in cheap mode',
        type=int,
        default=pipeline.DEFAULT_BUDGET,
    )
    parser.add_argument(
        '--limit',
        help='Token limit per request in accurate mode',
        type=int,
        default=pipeline.DEFAULT_LIMIT,
    )
    parser.add_argument(
        '--max-ptms',
        help='Extract metadata for at most this many PTMs',
        type=int,
        default=None,
    )
    parser.add_argument(
        '--registry',
        help='Only extract metadata for PTMs from this registry',
        default=None,
    )
    parser.add_argument(
        '--scorer',
        help='Relevance scorer for selecting card chunks in cheap mode',
        choices=sorted(SCORERS),
        default='overlap',
    )
    parser.add_argument('--endpoint', help='Chat completions URL of the live client')
    parser.add_argument('--model-id', help='Model requested from the live client')
    parser.add_argument(
        '--api-key-env',
        help='Environment variable holding the API key of the live client',
        default=DEFAULT_API_KEY_ENV,
    )
    parser.add_argument(
        '--rate-limit', help='Maximal number of requests per second', type=float, default=None)
    parser.add_argument('--timeout', help='Request timeout in seconds', type=float, default=60)
    parser.add_argument('--retries', help='Retries per request', type=int, default=2)
    add_jobs(parser, help='Number of model cards processed in parallel')
    parser.add_argument(
        '--truth',
        metavar='TRUTH',
        help='Ground truth (JSON object mapping PTM ids to field values) to evaluate against',
        type=PathType(type='file'),
        default=None,
    )


def run(args):
    if args.budget < 1 or args.limit < 1:
        raise ParserError('token budget and limit must be positive')
    settings = dict(
        name=args.client,
        script=args.script,
        endpoint=args.endpoint,
        model_id=args.model_id,
        api_key_env=args.api_key_env,
        rate_limit=args.rate_limit,
        timeout=args.timeout,
        retries=args.retries)
    store = get_store(args, client=settings)
    try:
        client = get_client(**settings)
    except ValueError as e:
        raise ParserError(str(e))
    args.log.info('extracting in {0} mode with client {1}'.format(args.mode, client.id))

    counts = pipeline.extract_all(
        store,
        client,
        mode=args.mode,
        max_ptms=args.max_ptms,
        jobs=args.cfg.jobs,
        ptm_filter=(lambda p: p.registry == args.registry) if args.registry else None,
        budget=args.budget,
        limit=args.limit,
        scorer=SCORERS[args.scorer]())
    res = counts.__json__()
    res['requests'] = len(client.prompts)
    res['ptm_ptm_links'] = derive_ptm_ptm_links(store)

    if args.truth:
        with open(str(args.truth), encoding='utf-8') as fp:
            truth = json.load(fp)
        extracted = {ptm_id: data for ptm_id, data, _ in store.metadata() if ptm_id in truth}
        missing = sorted(set(truth) - set(extracted))
        if missing:
            args.log.warning('no metadata for ground truth PTMs: {0}'.format(', '.join(missing)))
            truth = {k: v for k, v in truth.items() if k in extracted}
        acc = evaluate_accuracy(extracted, truth)
        args.log.info('accuracy: {0.matches}/{0.total}'.format(acc))
        res['accuracy'] = acc.__json__()
    return res
