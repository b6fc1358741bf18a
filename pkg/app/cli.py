"""
CLI - click 명령 그룹

모든 명령은 성공 시 0으로 종료하고, UniDocError가 나면 stderr에
`error code=<CODE> message=<...>` 한 줄을 쓰고 1로 종료합니다.
stdout에는 JSON(리포트, eval 라인)만 씁니다.
"""
import logging
from typing import Any, Dict, List, Optional

import click
import uvicorn

from app.api.routes import create_app
from core.config import CHECKPOINT_PATH, HOST, PORT, setup_logging
from core.errors import UniDocError
from core.imageio import read_image
from core.utils import dumps_json
from models.denoiser import VARIANTS
from pipeline.ablation import DEFAULT_ABLATIONS, ablate, interference
from pipeline.config import RunConfig, load_run_config
from pipeline.evaluate import evaluate, json_lines
from pipeline.gradcheck_suite import CASES, DEFAULT_SEEDS, DEFAULT_TOL, run_suite
from pipeline.graph import run_pipeline
from pipeline.inference import dewarp_file, restore_file
from pipeline.training import TrainResult, extend_task, train_stage1, train_stage2
from priors.pool import build_prior_pool, write_prior_pool
from synth.dataset import SYNTH_TASKS, write_dataset

logger = logging.getLogger(__name__)

ABLATION_CHOICES = [v for v in VARIANTS if v != "none"]


class UniDocGroup(click.Group):
    """UniDocError → 한 줄 오류 + 종료 코드 1"""

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except UniDocError as e:
            click.echo(e.one_line(), err=True)
            ctx.exit(1)


class CliState:
    """전역 플래그 보관, 명령별 overrides와 합쳐 RunConfig 생성"""

    def __init__(self, config_path: Optional[str], overrides: Dict[str, Any]):
        self.config_path = config_path
        self.overrides = overrides

    def run_config(self, **overrides: Any) -> RunConfig:
        return load_run_config(self.config_path, {**self.overrides, **overrides})


def _split(value: Optional[str]) -> Optional[List[str]]:
    if not value:
        return None
    return [part.strip() for part in value.split(",") if part.strip()]


def _echo_json(obj: Any) -> None:
    click.echo(dumps_json(obj))


def _echo_training(result: TrainResult) -> None:
    _echo_json({
        "stage": result.stage,
        "checkpoint": result.checkpoint,
        "group_sizes": result.group_sizes,
        "report": result.report,
    })


@click.group(cls=UniDocGroup)
@click.option('-c', '--config', 'config_path', type=click.Path(dir_okay=False), default=None,
              help="RunConfig JSON 파일 (기본값 < 파일 < 플래그)")
@click.option('-s', '--seed', type=int, default=None, help="실행 시드")
@click.option('-o', '--out', 'out_dir', type=click.Path(file_okay=False), default=None,
              help="출력 디렉터리 (기본: OUTPUT_DIR)")
@click.option('-q', '--quiet', is_flag=True, default=False, help="진행 막대와 INFO 로그 끄기")
@click.option('--log-level', type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR'], case_sensitive=False),
              default=None, help="로그 레벨 (기본: LOG_LEVEL)")
@click.pass_context
def cli(ctx: click.Context, config_path, seed, out_dir, quiet, log_level):
    """UniDoc: 문서 이미지 복원 diffusion 모델 학습/추론"""
    setup_logging("WARNING" if quiet and not log_level else log_level)
    ctx.obj = CliState(config_path, {"seed": seed, "out_dir": out_dir, "quiet": True if quiet else None})


# ==================== 데이터 ====================

@cli.command()
@click.option('-t', '--task', type=click.Choice(SYNTH_TASKS), required=True, help="합성할 태스크")
@click.option('-n', '--count', type=click.IntRange(min=1), default=16, help="쌍 개수")
@click.option('--size', type=click.IntRange(min=8), default=None, help="정사각 크기 (기본: image_size)")
@click.option('--outdir', type=click.Path(file_okay=False), default=None, help="출력 루트 (기본: <out>/synth)")
@click.pass_obj
def synth(state: CliState, task, count, size, outdir):
    """시드 기반 합성 쌍을 PPM으로 저장"""
    cfg = state.run_config()
    manifest = write_dataset(outdir or cfg.output_path("synth"), task, count, size or cfg.image_size,
                             cfg.seed, cfg.G, progress=not cfg.quiet)
    _echo_json(manifest)


@cli.command()
@click.option('-i', '--input', 'input_path', type=click.Path(dir_okay=False), required=True, help="입력 이미지")
@click.option('--outdir', type=click.Path(file_okay=False), required=True, help="채널 PGM 출력 디렉터리")
@click.pass_obj
def priors(state: CliState, input_path, outdir):
    """Prior Pool 10채널을 PGM으로 저장"""
    cfg = state.run_config()
    pool = build_prior_pool(read_image(input_path), cfg.prior_settings())
    paths = write_prior_pool(pool, outdir)
    _echo_json({"files": paths, "means": pool.channel_means()})


# ==================== 학습 ====================

@cli.command('train-stage1')
@click.option('--iters', type=click.IntRange(min=0), default=None, help="반복 횟수 (stage1_iters)")
@click.option('--tasks', default=None, help="쉼표로 구분한 태스크 목록")
@click.option('--variant', type=click.Choice(list(VARIANTS)), default=None, help="ablation 변형")
@click.pass_obj
def train_stage1_cmd(state: CliState, iters, tasks, variant):
    """Stage 1: 인코더 + PPB 다중 태스크 학습"""
    cfg = state.run_config(stage1_iters=iters, tasks=_split(tasks), variant=variant)
    _echo_training(train_stage1(cfg))


@cli.command('train-stage2')
@click.option('--checkpoint', type=click.Path(dir_okay=False), default=None,
              help="Stage 1 체크포인트 (기본: <out>/stage1.uddf)")
@click.option('--iters', type=click.IntRange(min=0), default=None, help="반복 횟수 (stage2_iters)")
@click.pass_obj
def train_stage2_cmd(state: CliState, checkpoint, iters):
    """Stage 2: 인코더 동결, CPB 학습"""
    cfg = state.run_config(stage2_iters=iters)
    _echo_training(train_stage2(cfg, checkpoint or cfg.output_path("stage1.uddf")))


@cli.command('extend-task')
@click.option('--checkpoint', type=click.Path(dir_okay=False), default=None,
              help="시작 체크포인트 (기본: <out>/stage2.uddf)")
@click.option('-t', '--task', 'new_task', default=None, help="새 태스크 이름 (기본: new_task)")
@click.option('--iters', type=click.IntRange(min=0), default=None, help="반복 횟수 (extend_iters)")
@click.pass_obj
def extend_task_cmd(state: CliState, checkpoint, new_task, iters):
    """빈 슬롯에 태스크를 추가하고 PFM만 학습"""
    cfg = state.run_config(extend_iters=iters)
    _echo_training(extend_task(cfg, checkpoint or cfg.output_path("stage2.uddf"), new_task))


# ==================== 추론 ====================

@cli.command()
@click.option('--checkpoint', type=click.Path(dir_okay=False), required=True, help="UDDF 체크포인트")
@click.option('-i', '--input', 'input_path', type=click.Path(dir_okay=False), required=True, help="열화 이미지")
@click.option('-t', '--task', required=True, help="등록된 태스크 이름")
@click.option('-O', '--output', 'output_path', type=click.Path(dir_okay=False), required=True,
              help="복원 이미지 (.ppm 또는 .png)")
@click.option('--steps', type=click.IntRange(min=1), default=None, help="샘플링 단계 수 (기본: steps)")
@click.pass_obj
def restore(state: CliState, checkpoint, input_path, task, output_path, steps):
    """열화 이미지 복원"""
    cfg = state.run_config()
    restored = restore_file(checkpoint, input_path, task, output_path, steps, cfg.seed)
    _echo_json({"output": output_path, "task": task, "width": restored.shape[2], "height": restored.shape[1]})


@cli.command()
@click.option('--checkpoint', type=click.Path(dir_okay=False), required=True, help="CPB가 있는 체크포인트")
@click.option('-i', '--input', 'input_path', type=click.Path(dir_okay=False), required=True, help="왜곡 이미지")
@click.option('-O', '--output', 'output_path', type=click.Path(dir_okay=False), required=True,
              help="평탄화 이미지")
@click.option('--dump-bm', type=click.Path(dir_okay=False), default=None, help="backward map UDBM 저장 경로")
@click.pass_obj
def dewarp(state: CliState, checkpoint, input_path, output_path, dump_bm):
    """왜곡 문서 평탄화"""
    state.run_config()  # --config 검증
    flat = dewarp_file(checkpoint, input_path, output_path, dump_bm)
    _echo_json({"output": output_path, "bm": dump_bm, "width": flat.shape[2], "height": flat.shape[1]})


@cli.command('eval')
@click.option('--checkpoint', type=click.Path(dir_okay=False), required=True, help="평가할 체크포인트")
@click.option('--tasks', default=None, help="쉼표로 구분한 태스크 (기본: 등록된 전체)")
@click.option('-n', '--count', type=click.IntRange(min=1), default=8, help="태스크별 쌍 개수")
@click.option('--size', type=click.IntRange(min=16), default=None, help="이미지 크기 (16 이상, 기본: 체크포인트 값)")
@click.option('--summary-only', is_flag=True, default=False, help="샘플별 줄 생략")
@click.pass_obj
def eval_cmd(state: CliState, checkpoint, tasks, count, size, summary_only):
    """held-out 합성 쌍 평가 → JSON 라인 (stdout)"""
    cfg = state.run_config()
    # 파일이나 플래그에 seed가 없으면 체크포인트 seed
    seed = cfg.seed if "seed" in cfg.model_fields_set else None
    records = evaluate(checkpoint, _split(tasks), count, size, seed, per_sample=not summary_only)
    for line in json_lines(records):
        click.echo(line)


# ==================== 검증/실험 ====================

@cli.command()
@click.option('--seeds', type=click.IntRange(min=1), default=DEFAULT_SEEDS, help="케이스당 시드 수")
@click.option('--case', 'cases', type=click.Choice(list(CASES)), multiple=True, help="실행할 케이스 (반복 가능)")
@click.option('--tol', type=float, default=DEFAULT_TOL, help="최대 상대 오차")
@click.pass_obj
def gradcheck(state: CliState, seeds, cases, tol):
    """유한차분 gradient 검사 (실패 시 종료 코드 1)"""
    cfg = state.run_config()
    results = run_suite(seeds, list(cases) or None, tol, progress=not cfg.quiet)
    worst: Dict[str, float] = {}
    for r in results:
        worst[r.name] = max(worst.get(r.name, 0.0), r.max_rel_err)
    _echo_json({"checks": len(results), "tol": tol, "max_rel_err": worst})


@cli.command('ablate')
@click.option('--ablate', 'variants', type=click.Choice(ABLATION_CHOICES), multiple=True,
              help=f"비교할 변형 (반복 가능, 기본: {', '.join(DEFAULT_ABLATIONS)})")
@click.option('--iters', type=click.IntRange(min=1), default=None, help="반복 횟수 (stage1_iters)")
@click.pass_obj
def ablate_cmd(state: CliState, variants, iters):
    """full 모델 vs ablation 변형 Stage 1 비교 리포트"""
    cfg = state.run_config(stage1_iters=iters)
    _echo_json(ablate(cfg, list(variants) or None))


@cli.command('interference')
@click.option('--iters', type=click.IntRange(min=1), default=None, help="반복 횟수 (stage1_iters)")
@click.pass_obj
def interference_cmd(state: CliState, iters):
    """deblur 단독 vs deblur+deshadow, Prior Pool 유무 비교"""
    cfg = state.run_config(stage1_iters=iters)
    _echo_json(interference(cfg))


@cli.command('run-all')
@click.option('--checkpoint', type=click.Path(dir_okay=False), default=None,
              help="stage1_iters=0일 때 시작 체크포인트")
@click.option('-t', '--new-task', default=None, help="확장할 태스크 (기본: new_task)")
@click.pass_obj
def run_all(state: CliState, checkpoint, new_task):
    """stage1 → stage2 → (extend-task) → eval 전체 실행"""
    cfg = state.run_config(checkpoint=checkpoint, new_task=new_task)
    final = run_pipeline(cfg)
    for line in json_lines(final.get("eval_records", [])):
        click.echo(line)


@cli.command()
@click.option('--checkpoint', type=click.Path(dir_okay=False), default=None,
              help=f"서빙할 체크포인트 (기본: {CHECKPOINT_PATH})")
@click.option('--host', default=HOST, help="바인드 주소")
@click.option('--port', type=int, default=PORT, help="포트")
def serve(checkpoint, host, port):
    """HTTP 추론 서버 실행"""
    uvicorn.run(create_app(checkpoint), host=host, port=port)


def main() -> None:
    cli(prog_name="unidoc")
